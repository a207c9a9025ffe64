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
#include <optional>
#include <string>
#include <vector>

#include "crowdtag/autodiff.hpp"
#include "crowdtag/tensor.hpp"

namespace crowdtag {

struct Parameter {
  std::string name;
  Tensor value;
  // Part of the transformer backbone (frozen under freeze_backbone).
  bool backbone = false;
};

// Ordered, named parameter tensors. Ids are insertion indices.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value, bool backbone = false);
  std::optional<std::size_t> find(const std::string& name) const;

  Parameter& operator[](std::size_t id) { return params_[id]; }
  const Parameter& operator[](std::size_t id) const { return params_[id]; }
  std::size_t size() const { return params_.size(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

  std::size_t scalar_count() const;
  // Zero tensors shaped like every parameter.
  std::vector<Tensor> zeros_like() const;

 private:
  std::vector<Parameter> params_;
};

using Gradients = std::vector<Tensor>;

// Lazily exposes parameters as leaves of one graph. Leaves borrow the
// parameter storage, so the set must outlive the graph and stay unchanged
// while it is in use.
class ParamBinder {
 public:
  ParamBinder(Graph& graph, const ParameterSet& params, bool requires_grad);

  Var operator()(std::size_t id);
  Graph& graph() { return graph_; }
  bool requires_grad() const { return requires_grad_; }

  // grads[id] += scale * d(root)/d(param) for every parameter bound here.
  // Call after graph().backward(root).
  void accumulate(Gradients& grads, double scale = 1.0) const;

 private:
  Graph& graph_;
  const ParameterSet& params_;
  bool requires_grad_;
  std::vector<std::optional<Var>> vars_;
};

}  // namespace crowdtag
