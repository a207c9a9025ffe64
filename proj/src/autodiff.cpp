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

#include "crowdtag/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "crowdtag/error.hpp"
#include "eigen_maps.hpp"

namespace crowdtag {

const Tensor& Var::value() const { return graph_->value(*this); }

Var Graph::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  return Var(this, nodes_.size() - 1);
}

Var Graph::leaf(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.requires_grad = true;
  return Var(this, nodes_.size() - 1);
}

Var Graph::leaf_ref(const Tensor& value, bool requires_grad) {
  Node& n = nodes_.emplace_back();
  n.borrowed = &value;
  n.requires_grad = requires_grad;
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs,
                  BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  for (const Var& in : inputs) {
    if (&in.graph() != this) throw Error("operands belong to different graphs");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return Var(this, nodes_.size() - 1);
}

const Tensor& Graph::value(Var v) const { return nodes_[v.id()].value(); }

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.has_grad) return n.grad;
  return Tensor(n.value().shape());
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value().shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var root) {
  if (root.value().size() != 1) {
    throw ShapeError("backward() needs a scalar root, got shape " +
                     shape_string(root.shape()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_buffer(root.id()).fill(1.0);

  std::vector<Tensor*> slots;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    slots.assign(n.inputs.size(), nullptr);
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      if (nodes_[n.inputs[i]].requires_grad) slots[i] = &grad_buffer(n.inputs[i]);
    }
    n.backward(n.value(), n.grad, slots);
  }
}

// ---------------------------------------------------------------------------
// Broadcasting elementwise kernels.

namespace {

// Calls fn(i, ia, ib) for every flat output index i with the flat indices of
// the contributing elements of a and b.
template <class Fn>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b,
                        Fn&& fn) {
  const std::size_t total = shape_size(out);
  const std::size_t na = shape_size(a);
  const std::size_t nb = shape_size(b);
  if (a == out && b == out) {
    for (std::size_t i = 0; i < total; ++i) fn(i, i, i);
    return;
  }
  auto is_suffix = [&](const Shape& s) {
    if (s.size() > out.size()) return false;
    return std::equal(s.begin(), s.end(), out.end() - s.size());
  };
  if (a == out && is_suffix(b)) {
    for (std::size_t i = 0; i < total; ++i) fn(i, i, i % nb);
    return;
  }
  if (b == out && is_suffix(a)) {
    for (std::size_t i = 0; i < total; ++i) fn(i, i % na, i);
    return;
  }
  // General case: strides in output coordinates, zero on broadcast axes.
  const std::size_t rank = out.size();
  std::vector<std::size_t> sa(rank, 0), sb(rank, 0);
  auto fill_strides = [&](const Shape& s, std::vector<std::size_t>& st) {
    std::size_t stride = 1;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::size_t axis = s.size() - 1 - k;
      const std::size_t oaxis = rank - 1 - k;
      st[oaxis] = s[axis] == 1 ? 0 : stride;
      stride *= s[axis];
    }
  };
  fill_strides(a, sa);
  fill_strides(b, sb);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    fn(i, ia, ib);
    for (std::size_t k = rank; k-- > 0;) {
      ++idx[k];
      ia += sa[k];
      ib += sb[k];
      if (idx[k] < out[k]) break;
      ia -= sa[k] * out[k];
      ib -= sb[k] * out[k];
      idx[k] = 0;
    }
  }
}

Shape checked_broadcast(const char* op, const Shape& a, const Shape& b) {
  try {
    return broadcast_shape(a, b);
  } catch (const ShapeError&) {
    throw ShapeError(op, shape_string(a), shape_string(b));
  }
}

Var binary(ElementwiseOp op, Var a, Var b) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const char* name = op == ElementwiseOp::kAdd   ? "add"
                     : op == ElementwiseOp::kSub ? "sub"
                                                 : "mul";
  Shape out_shape = checked_broadcast(name, av.shape(), bv.shape());
  Tensor out(out_shape);
  double* o = out.data();
  const double* pa = av.data();
  const double* pb = bv.data();
  switch (op) {
    case ElementwiseOp::kAdd:
      for_each_broadcast(out_shape, av.shape(), bv.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) {
                           o[i] = pa[ia] + pb[ib];
                         });
      break;
    case ElementwiseOp::kSub:
      for_each_broadcast(out_shape, av.shape(), bv.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) {
                           o[i] = pa[ia] - pb[ib];
                         });
      break;
    default:
      for_each_broadcast(out_shape, av.shape(), bv.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) {
                           o[i] = pa[ia] * pb[ib];
                         });
      break;
  }
  const Tensor* ap = &av;
  const Tensor* bp = &bv;
  return g.record(
      std::move(out), {a, b},
      [op, ap, bp](const Tensor& out, const Tensor& go,
                   std::span<Tensor*> grads) {
        const double* gp = go.data();
        double* ga = grads[0] ? grads[0]->data() : nullptr;
        double* gb = grads[1] ? grads[1]->data() : nullptr;
        const double* pa = ap->data();
        const double* pb = bp->data();
        const double sign = op == ElementwiseOp::kSub ? -1.0 : 1.0;
        for_each_broadcast(out.shape(), ap->shape(), bp->shape(),
                           [&](std::size_t i, std::size_t ia, std::size_t ib) {
                             if (op == ElementwiseOp::kMul) {
                               if (ga) ga[ia] += gp[i] * pb[ib];
                               if (gb) gb[ib] += gp[i] * pa[ia];
                             } else {
                               if (ga) ga[ia] += gp[i];
                               if (gb) gb[ib] += sign * gp[i];
                             }
                           });
      });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var unary(ElementwiseOp op, Var a) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    switch (op) {
      case ElementwiseOp::kTanh: out[i] = std::tanh(x); break;
      case ElementwiseOp::kSigmoid: out[i] = sigmoid_scalar(x); break;
      case ElementwiseOp::kGelu: out[i] = gelu(x); break;
      case ElementwiseOp::kExp: out[i] = std::exp(x); break;
      case ElementwiseOp::kLog:
        if (!(x > 0)) throw Error("log: non-positive input " + std::to_string(x));
        out[i] = std::log(x);
        break;
      default: throw Error("unary: not a unary op");
    }
  }
  const Tensor* ap = &av;
  return g.record(std::move(out), {a},
                  [op, ap](const Tensor& out, const Tensor& go,
                           std::span<Tensor*> grads) {
                    Tensor& ga = *grads[0];
                    for (std::size_t i = 0; i < go.size(); ++i) {
                      const double y = out[i];
                      double d = 0.0;
                      switch (op) {
                        case ElementwiseOp::kTanh: d = 1.0 - y * y; break;
                        case ElementwiseOp::kSigmoid: d = y * (1.0 - y); break;
                        case ElementwiseOp::kGelu: d = gelu_grad((*ap)[i]); break;
                        case ElementwiseOp::kExp: d = y; break;
                        case ElementwiseOp::kLog: d = 1.0 / (*ap)[i]; break;
                        default: break;
                      }
                      ga[i] += go[i] * d;
                    }
                  });
}

}  // namespace

double gelu(double x) { return 0.5 * x * std::erfc(-x / std::numbers::sqrt2); }

double gelu_grad(double x) {
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi /
                     std::numbers::sqrt2;
  return cdf + x * pdf;
}

double logsumexp(std::span<const double> x) {
  if (x.empty()) throw ShapeError("logsumexp of an empty input");
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

Var elementwise(ElementwiseOp op, Var a, const Var* b) {
  switch (op) {
    case ElementwiseOp::kAdd:
    case ElementwiseOp::kSub:
    case ElementwiseOp::kMul:
      if (!b) throw Error("elementwise: binary op needs two operands");
      return binary(op, a, *b);
    default:
      return unary(op, a);
  }
}

Var add(Var a, Var b) { return binary(ElementwiseOp::kAdd, a, b); }
Var sub(Var a, Var b) { return binary(ElementwiseOp::kSub, a, b); }
Var mul(Var a, Var b) { return binary(ElementwiseOp::kMul, a, b); }
Var tanh(Var a) { return unary(ElementwiseOp::kTanh, a); }
Var sigmoid(Var a) { return unary(ElementwiseOp::kSigmoid, a); }
Var gelu(Var a) { return unary(ElementwiseOp::kGelu, a); }
Var exp(Var a) { return unary(ElementwiseOp::kExp, a); }
Var log(Var a) { return unary(ElementwiseOp::kLog, a); }

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= c;
  return a.graph().record(std::move(out), {a},
                          [c](const Tensor&, const Tensor& go,
                              std::span<Tensor*> grads) {
                            grads[0]->add_inplace(go, c);
                          });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.graph().record(Tensor::scalar(s), {a},
                          [](const Tensor&, const Tensor& go,
                             std::span<Tensor*> grads) {
                            const double g = go.item();
                            for (auto& v : grads[0]->values()) v += g;
                          });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.graph().record(std::move(out), {a},
                          [](const Tensor&, const Tensor& go,
                             std::span<Tensor*> grads) {
                            auto dst = grads[0]->values();
                            auto src = go.values();
                            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                          });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul", shape_string(av.shape()), shape_string(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  const Tensor* ap = &av;
  const Tensor* bp = &bv;
  return a.graph().record(
      std::move(out), {a, b},
      [ap, bp](const Tensor&, const Tensor& go, std::span<Tensor*> grads) {
        if (grads[0]) as_matrix(*grads[0]).noalias() += as_matrix(go) * as_matrix(*bp).transpose();
        if (grads[1]) as_matrix(*grads[1]).noalias() += as_matrix(*ap).transpose() * as_matrix(go);
      });
}

Var contract_last(Var t, Var e) {
  const Tensor& tv = t.value();
  const Tensor& ev = e.value();
  if (tv.rank() < 2 || ev.rank() != 1 || tv.shape().back() != ev.size()) {
    throw ShapeError("contract_last", shape_string(tv.shape()),
                     shape_string(ev.shape()));
  }
  Shape out_shape(tv.shape().begin(), tv.shape().end() - 1);
  const std::size_t d = ev.size();
  const std::size_t rows = tv.size() / d;
  Tensor out(out_shape);
  Eigen::Map<const RowMatrix> tm(tv.data(), rows, d);
  Eigen::Map<const Eigen::VectorXd> em(ev.data(), d);
  Eigen::Map<Eigen::VectorXd> om(out.data(), rows);
  om.noalias() = tm * em;
  const Tensor* tp = &tv;
  const Tensor* ep = &ev;
  return t.graph().record(
      std::move(out), {t, e},
      [tp, ep, rows, d](const Tensor&, const Tensor& go, std::span<Tensor*> grads) {
        Eigen::Map<const Eigen::VectorXd> gm(go.data(), rows);
        if (grads[0]) {
          Eigen::Map<RowMatrix> gt(grads[0]->data(), rows, d);
          Eigen::Map<const Eigen::VectorXd> em(ep->data(), d);
          gt.noalias() += gm * em.transpose();
        }
        if (grads[1]) {
          Eigen::Map<const RowMatrix> tm(tp->data(), rows, d);
          Eigen::Map<Eigen::VectorXd> ge(grads[1]->data(), d);
          ge.noalias() += tm.transpose() * gm;
        }
      });
}

Var mode3_contract(Var t, Var e) {
  if (t.value().rank() != 3) {
    throw ShapeError("mode3_contract", shape_string(t.shape()),
                     shape_string(e.shape()));
  }
  return contract_last(t, e);
}

Var logsumexp(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 1) {
    throw ShapeError("logsumexp expects a rank-1 tensor, got " +
                     shape_string(xv.shape()));
  }
  const double lse = logsumexp(xv.values());
  const Tensor* xp = &xv;
  return x.graph().record(Tensor::scalar(lse), {x},
                          [xp](const Tensor& out, const Tensor& go,
                               std::span<Tensor*> grads) {
                            const double g = go.item();
                            const double l = out.item();
                            Tensor& gx = *grads[0];
                            for (std::size_t i = 0; i < xp->size(); ++i) {
                              gx[i] += g * std::exp((*xp)[i] - l);
                            }
                          });
}

Var mean_rows(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) {
    throw ShapeError("mean_rows expects a rank-2 tensor, got " +
                     shape_string(av.shape()));
  }
  const std::size_t n = av.rows(), d = av.cols();
  Tensor out({d});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[c] += av.at(r, c);
  for (auto& v : out.values()) v /= static_cast<double>(n);
  return a.graph().record(std::move(out), {a},
                          [n, d](const Tensor&, const Tensor& go,
                                 std::span<Tensor*> grads) {
                            Tensor& ga = *grads[0];
                            const double inv = 1.0 / static_cast<double>(n);
                            for (std::size_t r = 0; r < n; ++r)
                              for (std::size_t c = 0; c < d; ++c) ga.at(r, c) += go[c] * inv;
                          });
}

}  // namespace crowdtag
