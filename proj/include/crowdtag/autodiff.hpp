// Copyright (c) 2026 The crowdtag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "crowdtag/tensor.hpp"

namespace crowdtag {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Backward closure of a recorded operation. `out` is the operation's value and
// `grad_out` the gradient of the root with respect to it; `input_grads[i]` is
// either null (input i needs no gradient) or a buffer the closure must
// accumulate into.
using BackwardFn = std::function<void(const Tensor& out, const Tensor& grad_out,
                                      std::span<Tensor*> input_grads)>;

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
// insertion order is a valid topological order for backward(). Node storage
// never relocates, so references returned by value() stay valid for the
// lifetime of the graph.
//
// A graph is used by one thread at a time. Leaves created with leaf_ref()
// borrow the caller's tensor, which lets several graphs read the same
// parameters concurrently.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  Var leaf_ref(const Tensor& value, bool requires_grad = true);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Gradient of the last backward() root with respect to v. Zeros when v was
  // not reached.
  Tensor grad(Var v) const;
  bool has_grad(Var v) const { return nodes_[v.id()].has_grad; }

  // Runs reverse accumulation from a scalar root. Throws ShapeError when the
  // root holds more than one value.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;

    const Tensor& value() const { return borrowed ? *borrowed : owned; }
  };

  Tensor& grad_buffer(std::size_t id);

  std::deque<Node> nodes_;
};

enum class ElementwiseOp { kAdd, kSub, kMul, kTanh, kSigmoid, kGelu, kExp, kLog };

// Unary kinds ignore `b`; binary kinds broadcast over trailing dimensions.
Var elementwise(ElementwiseOp op, Var a, const Var* b = nullptr);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var tanh(Var a);
Var sigmoid(Var a);
Var gelu(Var a);
Var exp(Var a);
Var log(Var a);

Var scale(Var a, double c);
Var sum(Var a);
Var reshape(Var a, Shape shape);

// Rank-2 matrix product.
Var matmul(Var a, Var b);

// out[m,n] = sum_k t[m,n,k] * e[k].
Var mode3_contract(Var t, Var e);
// Contracts the last axis of t (rank >= 2) with the vector e.
Var contract_last(Var t, Var e);

// Numerically stable log(sum(exp(x))) of a non-empty rank-1 tensor.
Var logsumexp(Var x);

// Mean over the rows of a rank-2 tensor, giving a rank-1 tensor.
Var mean_rows(Var a);

// Rows of `table` selected by `ids`, shape ids.size() x cols.
Var gather_rows(Var table, std::vector<std::size_t> ids);

// [a | b] for two rank-2 tensors with equal row counts.
Var concat_cols(Var a, Var b);

// Row-wise layer normalisation of a rank-2 tensor with affine parameters.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Scaled dot-product self-attention over `heads` equal slices of the model
// dimension. q, k, v are n x model_dim.
Var multi_head_attention(Var q, Var k, Var v, std::size_t heads);

// One direction of an LSTM over the rows of x (n x in). Gate blocks of
// w_ih (in x 4h), w_hh (h x 4h) and bias (4h) are ordered input, forget,
// cell, output. Returns n x h hidden states in input order.
Var lstm(Var x, Var w_ih, Var w_hh, Var bias, bool reverse);

// Scalar helpers used outside the graph.
double logsumexp(std::span<const double> x);
double gelu(double x);
double gelu_grad(double x);

}  // namespace crowdtag
