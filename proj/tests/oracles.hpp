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

// Independent reference implementations used as test oracles. Everything
// here is written with plain loops and no shared code paths with the
// library beyond the Tensor container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "crowdtag/autodiff.hpp"
#include "crowdtag/model.hpp"
#include "crowdtag/parameters.hpp"
#include "crowdtag/tensor.hpp"

namespace oracle {

using crowdtag::Shape;
using crowdtag::Tensor;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (double& v : t.values()) v = n(rng);
  return t;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

// out[...] = sum_k t[..., k] e[k]
inline Tensor contract_last(const Tensor& t, const Tensor& e) {
  Shape s(t.shape().begin(), t.shape().end() - 1);
  const std::size_t d = e.size();
  Tensor out(s);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += t[i * d + k] * e[k];
    out[i] = acc;
  }
  return out;
}

// erf from its Maclaurin series for |x| <= 3 and from the erfc continued
// fraction beyond, where the series cancels badly.
inline double erf_series(double x) {
  if (std::abs(x) > 3.0) {
    const double a = std::abs(x);
    double k = a;
    for (int n = 300; n >= 1; --n) k = a + (n / 2.0) / k;
    const double erfc = std::exp(-a * a) / std::sqrt(M_PI) / k;
    return x > 0 ? 1.0 - erfc : erfc - 1.0;
  }
  double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const double add = term / (2 * n + 1);
    sum += add;
    if (std::abs(add) < 1e-18) break;
  }
  return 2.0 / std::sqrt(M_PI) * sum;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + erf_series(x / std::sqrt(2.0))); }

// Adapter written out element by element.
inline Tensor adapter(const Tensor& h, const crowdtag::AdapterParams& p) {
  const std::size_t n = h.rows(), d = h.cols(), k = p.b_down.size();
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> mid(k);
    for (std::size_t j = 0; j < k; ++j) {
      double s = p.b_down[j];
      for (std::size_t c = 0; c < d; ++c) s += h.at(i, c) * p.w_down.at(c, j);
      mid[j] = gelu(s);
    }
    for (std::size_t c = 0; c < d; ++c) {
      double s = p.b_up[c] + h.at(i, c);
      for (std::size_t j = 0; j < k; ++j) s += mid[j] * p.w_up.at(j, c);
      out.at(i, c) = s;
    }
  }
  return out;
}

// All label sequences of length n over t tags, in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_sequences(std::size_t n, std::size_t t) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> y(n, 0);
  while (true) {
    out.push_back(y);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++y[i] < t) break;
      y[i] = 0;
      if (i == 0) return out;
    }
    if (n == 0) return out;
  }
}

inline double crf_score(const Tensor& em, const Tensor& trans, const Tensor& start,
                        const Tensor& end, const std::vector<std::size_t>& y) {
  double s = start[y[0]] + end[y.back()];
  for (std::size_t i = 0; i < y.size(); ++i) s += em.at(i, y[i]);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) s += trans.at(y[i], y[i + 1]);
  return s;
}

inline double crf_log_partition(const Tensor& em, const Tensor& trans, const Tensor& start,
                                const Tensor& end) {
  double m = -INFINITY;
  std::vector<double> scores;
  for (const auto& y : all_sequences(em.rows(), em.cols())) {
    scores.push_back(crf_score(em, trans, start, end, y));
    m = std::max(m, scores.back());
  }
  double s = 0.0;
  for (double v : scores) s += std::exp(v - m);
  return m + std::log(s);
}

// Central finite differences of `loss` with respect to every element of
// `inputs`; returns the largest relative error against the analytic gradient
// computed by the graph. Relative error is |a - n| / max(|a|, |n|, floor).
// The five-point stencil at h = 1e-3 keeps both truncation and roundoff
// near 1e-12 for losses of order 10.
inline double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

template <class F>
double five_point(F&& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Worst entry, for diagnostics.
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t worst_input = 0;

  void record(std::size_t input, double analytic, double numeric, double floor) {
    const double e = rel_error(analytic, numeric, floor);
    if (e > max_rel_error) {
      max_rel_error = e;
      worst_input = input;
      worst_analytic = analytic;
      worst_numeric = numeric;
    }
    ++checked;
  }
};

inline GradCheck check_graph_gradients(
    std::vector<Tensor> inputs,
    const std::function<crowdtag::Var(crowdtag::Graph&, const std::vector<crowdtag::Var>&)>& f,
    double h = 1e-3, double floor = 1e-6) {
  using crowdtag::Graph;
  using crowdtag::Var;
  Graph g;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.leaf(t));
  Var out = f(g, leaves);
  g.backward(out);
  std::vector<Tensor> analytic;
  for (const auto& v : leaves) analytic.push_back(g.grad(v));

  auto eval = [&](const std::vector<Tensor>& vals) {
    Graph g2;
    std::vector<Var> ls;
    for (const auto& t : vals) ls.push_back(g2.constant(t));
    return f(g2, ls).value().item();
  };
  GradCheck r;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double x = inputs[i][k];
      const double numeric = five_point([&](double v) {
        inputs[i][k] = v;
        return eval(inputs);
      }, x, h);
      inputs[i][k] = x;
      r.record(i, analytic[i][k], numeric, floor);
    }
  return r;
}

// Same check over every scalar of a model's parameter set.
inline GradCheck check_model_gradients(
    crowdtag::ParameterSet& params,
    const std::function<crowdtag::Var(crowdtag::ParamBinder&)>& loss, double h = 1e-3,
    double floor = 1e-6) {
  using crowdtag::Graph;
  using crowdtag::ParamBinder;
  crowdtag::Gradients grads = params.zeros_like();
  {
    Graph g;
    ParamBinder bind(g, params, true);
    auto out = loss(bind);
    g.backward(out);
    bind.accumulate(grads);
  }
  auto eval = [&] {
    Graph g;
    ParamBinder bind(g, params, false);
    return loss(bind).value().item();
  };
  GradCheck r;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t k = 0; k < params[i].value.size(); ++k) {
      double& x = params[i].value[k];
      const double x0 = x;
      const double numeric = five_point([&](double v) {
        x = v;
        return eval();
      }, x0, h);
      x = x0;
      r.record(i, grads[i][k], numeric, floor);
    }
  return r;
}

// Replaces every parameter with N(0, scale^2) noise so that no gradient path
// is blocked by zero initialization.
inline void randomize(crowdtag::ParameterSet& params, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& p : params)
    for (double& v : p.value.values()) v = n(rng);
}

// Cohen's kappa of two equal-length label sequences from raw counts.
inline double kappa(const std::vector<int>& a, const std::vector<int>& b, int labels) {
  const double n = static_cast<double>(a.size());
  double agree = 0.0;
  std::vector<double> ca(labels, 0.0), cb(labels, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (int l = 0; l < labels; ++l) pe += (ca[l] / n) * (cb[l] / n);
  if (pe == 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

}  // namespace oracle
