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

#include <cmath>
#include <random>

#include "crowdtag/autodiff.hpp"
#include "crowdtag/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crowdtag;

namespace {

Tensor naive_layer_norm(const Tensor& x, const Tensor& g, const Tensor& b, double eps) {
  Tensor out(x.shape());
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += x.at(r, c);
    mean /= d;
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (x.at(r, c) - mean) * (x.at(r, c) - mean);
    var /= d;
    for (std::size_t c = 0; c < d; ++c)
      out.at(r, c) = (x.at(r, c) - mean) / std::sqrt(var + eps) * g[c] + b[c];
  }
  return out;
}

Tensor naive_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
  const std::size_t n = q.rows(), d = q.cols(), dh = d / heads;
  Tensor out({n, d});
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n);
      double m = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q.at(i, h * dh + c) * k.at(j, h * dh + c);
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        m = std::max(m, s[j]);
      }
      double z = 0.0;
      for (double& x : s) z += (x = std::exp(x - m));
      for (std::size_t c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += s[j] / z * v.at(j, h * dh + c);
        out.at(i, h * dh + c) = acc;
      }
    }
  return out;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor naive_lstm(const Tensor& x, const Tensor& wih, const Tensor& whh, const Tensor& b,
                  bool reverse) {
  const std::size_t n = x.rows(), in = x.cols(), h = whh.rows();
  Tensor out({n, h});
  std::vector<double> hp(h, 0.0), cp(h, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = reverse ? n - 1 - s : s;
    std::vector<double> z(4 * h);
    for (std::size_t j = 0; j < 4 * h; ++j) {
      double acc = b[j];
      for (std::size_t c = 0; c < in; ++c) acc += x.at(t, c) * wih.at(c, j);
      for (std::size_t c = 0; c < h; ++c) acc += hp[c] * whh.at(c, j);
      z[j] = acc;
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sig(z[j]), f = sig(z[h + j]), g = std::tanh(z[2 * h + j]),
                   o = sig(z[3 * h + j]);
      cp[j] = f * cp[j] + i * g;
      hp[j] = o * std::tanh(cp[j]);
      out.at(t, j) = hp[j];
    }
  }
  return out;
}

void require_close(const Tensor& a, const Tensor& b, double tol) {
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol));
}

constexpr double kGradTol = 1e-4;

}  // namespace

TEST_SUITE("numeric-core") {

TEST_CASE("tensor construction and broadcast shapes") {
  CHECK(Tensor().size() == 1);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
  CHECK(broadcast_shape({3, 4}, {4}) == Shape{3, 4});
  CHECK(broadcast_shape({3, 1}, {1, 4}) == Shape{3, 4});
  CHECK_THROWS_AS(broadcast_shape({3, 4}, {3}), ShapeError);
}

TEST_CASE("elementwise add with broadcasting over rows") {
  Graph g;
  Var a = g.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = g.constant(Tensor::vector({10, 20, 30}));
  CHECK(add(a, b).value() == Tensor::matrix(2, 3, {11, 22, 33, 14, 25, 36}));
  Var c = g.constant(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(add(a, c), ShapeError);
}

TEST_CASE("matmul matches the triple loop") {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 10; ++s) {
    Tensor a = oracle::random_tensor({3, 5}, rng), b = oracle::random_tensor({5, 2}, rng);
    Graph g;
    require_close(matmul(g.constant(a), g.constant(b)).value(), oracle::matmul(a, b), 1e-12);
  }
  Graph g;
  CHECK_THROWS_AS(matmul(g.constant(Tensor({2, 3})), g.constant(Tensor({2, 3}))), ShapeError);
}

TEST_CASE("mode-3 contraction matches the naive sum and rejects bad ranks") {
  std::mt19937_64 rng(4);
  Tensor t = oracle::random_tensor({3, 4, 2}, rng), e = oracle::random_tensor({2}, rng);
  Graph g;
  require_close(mode3_contract(g.constant(t), g.constant(e)).value(),
                oracle::contract_last(t, e), 1e-12);
  CHECK_THROWS_AS(mode3_contract(g.constant(Tensor({3, 4})), g.constant(e)), ShapeError);
  CHECK_THROWS_AS(contract_last(g.constant(t), g.constant(Tensor({3}))), ShapeError);
}

TEST_CASE("gelu uses the exact erf form") {
  CHECK(gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(gelu(0.0) == 0.0);
  for (double x = -3.0; x <= 3.0; x += 0.25)
    CHECK(gelu(x) == doctest::Approx(oracle::gelu(x)).epsilon(1e-12));
  for (double x = -3.0; x <= 3.0; x += 0.5) {
    const double h = 1e-6;
    CHECK(gelu_grad(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("logsumexp is stable and rejects empty input") {
  std::vector<double> big{1000.0, 1000.0};
  CHECK(logsumexp(std::span<const double>(big)) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  std::vector<double> empty;
  CHECK_THROWS_AS(logsumexp(std::span<const double>(empty)), ShapeError);
}

TEST_CASE("log of a non-positive value is an error") {
  Graph g;
  CHECK_THROWS_AS(log(g.constant(Tensor::vector({1.0, 0.0}))), Error);
}

TEST_CASE("backward requires a scalar root") {
  Graph g;
  Var a = g.leaf(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(g.backward(a), ShapeError);
}

TEST_CASE("layer norm, attention and LSTM forward match naive loops") {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 5; ++s) {
    Tensor x = oracle::random_tensor({4, 6}, rng);
    Tensor gm = oracle::random_tensor({6}, rng), bt = oracle::random_tensor({6}, rng);
    Graph g;
    require_close(layer_norm(g.constant(x), g.constant(gm), g.constant(bt)).value(),
                  naive_layer_norm(x, gm, bt, 1e-5), 1e-12);
    Tensor q = oracle::random_tensor({4, 6}, rng), k = oracle::random_tensor({4, 6}, rng),
           v = oracle::random_tensor({4, 6}, rng);
    require_close(multi_head_attention(g.constant(q), g.constant(k), g.constant(v), 2).value(),
                  naive_attention(q, k, v, 2), 1e-12);
    Tensor wih = oracle::random_tensor({6, 12}, rng), whh = oracle::random_tensor({3, 12}, rng),
           b = oracle::random_tensor({12}, rng);
    for (bool rev : {false, true})
      require_close(
          lstm(g.constant(x), g.constant(wih), g.constant(whh), g.constant(b), rev).value(),
          naive_lstm(x, wih, whh, b, rev), 1e-12);
  }
}

TEST_CASE("every differentiable op passes the finite-difference check") {
  using V = std::vector<Var>;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto R = [&](Shape s) { return oracle::random_tensor(std::move(s), rng, 0.7); };
    std::vector<std::pair<const char*, oracle::GradCheck>> checks;
    checks.emplace_back("elementwise", oracle::check_graph_gradients(
        {R({3, 4}), R({4}), R({3, 4})}, [](Graph&, const V& v) {
          Var a = add(mul(tanh(v[0]), sigmoid(v[1])), gelu(sub(v[2], v[1])));
          Var b = log(add(exp(scale(v[0], 0.3)), exp(v[2])));
          return sum(mul(a, b));
        }));
    checks.emplace_back("matmul", oracle::check_graph_gradients(
        {R({3, 4}), R({4, 2})},
        [](Graph&, const V& v) { return sum(tanh(matmul(v[0], v[1]))); }));
    checks.emplace_back("contract", oracle::check_graph_gradients(
        {R({3, 2, 4}), R({4})},
        [](Graph&, const V& v) { return sum(tanh(contract_last(v[0], v[1]))); }));
    checks.emplace_back("reductions", oracle::check_graph_gradients(
        {R({3, 4})}, [](Graph&, const V& v) {
          return add(logsumexp(reshape(v[0], {12})), sum(tanh(mean_rows(v[0]))));
        }));
    checks.emplace_back("gather-concat", oracle::check_graph_gradients(
        {R({5, 3}), R({3, 2})}, [](Graph&, const V& v) {
          return sum(tanh(concat_cols(gather_rows(v[0], {4, 1, 4}), v[1])));
        }));
    checks.emplace_back("layer-norm", oracle::check_graph_gradients(
        {R({3, 5}), R({5}), R({5}), R({3, 5})}, [](Graph&, const V& v) {
          return sum(mul(layer_norm(v[0], v[1], v[2]), v[3]));
        }));
    checks.emplace_back("attention", oracle::check_graph_gradients(
        {R({4, 6}), R({4, 6}), R({4, 6}), R({4, 6})}, [](Graph&, const V& v) {
          return sum(mul(multi_head_attention(v[0], v[1], v[2], 3), v[3]));
        }));
    checks.emplace_back("lstm", oracle::check_graph_gradients(
        {R({4, 3}), R({3, 8}), R({2, 8}), R({8}), R({4, 2})}, [](Graph&, const V& v) {
          return add(sum(mul(lstm(v[0], v[1], v[2], v[3], false), v[4])),
                     sum(mul(lstm(v[0], v[1], v[2], v[3], true), v[4])));
        }));
    for (const auto& [name, r] : checks) {
      INFO(name << " seed " << seed);
      CHECK(r.checked > 0);
      CHECK(r.max_rel_error < kGradTol);
    }
  }
}

TEST_CASE("gradients accumulate when a value is used twice") {
  Graph g;
  Var a = g.leaf(Tensor::vector({2.0, 3.0}));
  Var y = sum(mul(a, a));
  g.backward(y);
  CHECK(g.grad(a) == Tensor::vector({4.0, 6.0}));
}

}  // TEST_SUITE
