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

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <utility>

#include "crowdtag/autodiff.hpp"
#include "crowdtag/error.hpp"
#include "eigen_maps.hpp"

namespace crowdtag {

Var gather_rows(Var table, std::vector<std::size_t> ids) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) {
    throw ShapeError("gather_rows expects a rank-2 table, got " +
                     shape_string(tv.shape()));
  }
  if (ids.empty()) throw ShapeError("gather_rows with no ids");
  const std::size_t d = tv.cols();
  Tensor out({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= tv.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(ids[r]) +
                       " out of range for table " + shape_string(tv.shape()));
    }
    std::copy_n(tv.data() + ids[r] * d, d, out.data() + r * d);
  }
  return table.graph().record(
      std::move(out), {table},
      [ids = std::move(ids), d](const Tensor&, const Tensor& go,
                                std::span<Tensor*> grads) {
        double* gt = grads[0]->data();
        for (std::size_t r = 0; r < ids.size(); ++r) {
          for (std::size_t c = 0; c < d; ++c) gt[ids[r] * d + c] += go[r * d + c];
        }
      });
}

Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) {
    throw ShapeError("concat_cols", shape_string(av.shape()),
                     shape_string(bv.shape()));
  }
  const std::size_t n = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out({n, ca + cb});
  as_matrix(out).leftCols(ca) = as_matrix(av);
  as_matrix(out).rightCols(cb) = as_matrix(bv);
  return a.graph().record(std::move(out), {a, b},
                          [ca, cb](const Tensor&, const Tensor& go,
                                   std::span<Tensor*> grads) {
                            auto g = as_matrix(go);
                            if (grads[0]) as_matrix(*grads[0]) += g.leftCols(ca);
                            if (grads[1]) as_matrix(*grads[1]) += g.rightCols(cb);
                          });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  if (xv.rank() != 2 || gv.shape() != Shape{xv.cols()} || bv.shape() != gv.shape()) {
    throw ShapeError("layer_norm", shape_string(xv.shape()),
                     shape_string(gv.shape()));
  }
  const std::size_t n = xv.rows(), d = xv.cols();
  auto xhat = std::make_shared<Tensor>(Shape{n, d});
  auto inv_std = std::make_shared<std::vector<double>>(n);
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xv.at(r, c);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double z = xv.at(r, c) - mu;
      var += z * z;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (xv.at(r, c) - mu) * is;
      xhat->at(r, c) = h;
      out.at(r, c) = h * gv[c] + bv[c];
    }
  }
  const Tensor* gp = &gv;
  return x.graph().record(
      std::move(out), {x, gamma, beta},
      [xhat, inv_std, gp, n, d](const Tensor&, const Tensor& go,
                                std::span<Tensor*> grads) {
        std::vector<double> dh(d);
        for (std::size_t r = 0; r < n; ++r) {
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double g = go.at(r, c);
            const double h = xhat->at(r, c);
            if (grads[1]) (*grads[1])[c] += g * h;
            if (grads[2]) (*grads[2])[c] += g;
            dh[c] = g * (*gp)[c];
            mean_dh += dh[c];
            mean_dh_h += dh[c] * h;
          }
          if (!grads[0]) continue;
          mean_dh /= static_cast<double>(d);
          mean_dh_h /= static_cast<double>(d);
          const double is = (*inv_std)[r];
          for (std::size_t c = 0; c < d; ++c) {
            grads[0]->at(r, c) +=
                is * (dh[c] - mean_dh - xhat->at(r, c) * mean_dh_h);
          }
        }
      });
}

Var multi_head_attention(Var q, Var k, Var v, std::size_t heads) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  if (qv.rank() != 2 || kv.shape() != qv.shape() || vv.shape() != qv.shape()) {
    throw ShapeError("multi_head_attention", shape_string(qv.shape()),
                     shape_string(kv.shape()));
  }
  const std::size_t n = qv.rows(), dm = qv.cols();
  if (heads == 0 || dm % heads != 0) {
    throw ShapeError("multi_head_attention: model dim " + std::to_string(dm) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  const auto hd = static_cast<Eigen::Index>(dm / heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  auto probs = std::make_shared<std::vector<RowMatrix>>(heads);
  Tensor out({n, dm});
  auto Q = as_matrix(qv);
  auto K = as_matrix(kv);
  auto V = as_matrix(vv);
  auto O = as_matrix(out);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto off = static_cast<Eigen::Index>(h) * hd;
    RowMatrix s = inv_sqrt * (Q.middleCols(off, hd) * K.middleCols(off, hd).transpose());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp();
      s.row(r) /= s.row(r).sum();
    }
    O.middleCols(off, hd).noalias() = s * V.middleCols(off, hd);
    (*probs)[h] = std::move(s);
  }
  const Tensor *qp = &qv, *kp = &kv, *vp = &vv;
  return q.graph().record(
      std::move(out), {q, k, v},
      [probs, qp, kp, vp, heads, hd, inv_sqrt](const Tensor&, const Tensor& go,
                                               std::span<Tensor*> grads) {
        auto G = as_matrix(go);
        auto Q = as_matrix(*qp);
        auto K = as_matrix(*kp);
        auto V = as_matrix(*vp);
        for (std::size_t h = 0; h < heads; ++h) {
          const auto off = static_cast<Eigen::Index>(h) * hd;
          const RowMatrix& p = (*probs)[h];
          auto gh = G.middleCols(off, hd);
          if (grads[2]) as_matrix(*grads[2]).middleCols(off, hd).noalias() += p.transpose() * gh;
          if (!grads[0] && !grads[1]) continue;
          RowMatrix dp = gh * V.middleCols(off, hd).transpose();
          // Softmax Jacobian, row by row.
          for (Eigen::Index r = 0; r < dp.rows(); ++r) {
            const double dot = dp.row(r).dot(p.row(r));
            dp.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
          }
          dp *= inv_sqrt;
          if (grads[0]) as_matrix(*grads[0]).middleCols(off, hd).noalias() += dp * K.middleCols(off, hd);
          if (grads[1]) as_matrix(*grads[1]).middleCols(off, hd).noalias() += dp.transpose() * Q.middleCols(off, hd);
        }
      });
}

namespace {

struct LstmTrace {
  RowMatrix gates;  // n x 4h, post-activation i, f, g, o
  RowMatrix cell;   // n x h
  RowMatrix cell_tanh;
  RowMatrix hidden;
};

inline double sigm(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var lstm(Var x, Var w_ih, Var w_hh, Var bias, bool reverse) {
  const Tensor& xv = x.value();
  const Tensor& wi = w_ih.value();
  const Tensor& wh = w_hh.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || wi.rank() != 2 || wi.rows() != xv.cols()) {
    throw ShapeError("lstm", shape_string(xv.shape()), shape_string(wi.shape()));
  }
  const std::size_t hs = wh.rows();
  if (wh.shape() != Shape{hs, 4 * hs} || wi.cols() != 4 * hs ||
      bv.shape() != Shape{4 * hs}) {
    throw ShapeError("lstm", shape_string(wh.shape()), shape_string(bv.shape()));
  }
  const auto n = static_cast<Eigen::Index>(xv.rows());
  const auto h = static_cast<Eigen::Index>(hs);
  auto trace = std::make_shared<LstmTrace>();
  Eigen::Map<const Eigen::RowVectorXd> b(bv.data(), 4 * h);
  RowMatrix z = as_matrix(xv) * as_matrix(wi);
  z.rowwise() += b;
  trace->gates.resize(n, 4 * h);
  trace->cell.resize(n, h);
  trace->cell_tanh.resize(n, h);
  trace->hidden.resize(n, h);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(h);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(h);
  auto WH = as_matrix(wh);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    Eigen::RowVectorXd pre = z.row(t);
    pre.noalias() += h_prev * WH;
    auto gt = trace->gates.row(t);
    for (Eigen::Index j = 0; j < h; ++j) {
      gt(j) = sigm(pre(j));
      gt(h + j) = sigm(pre(h + j));
      gt(2 * h + j) = std::tanh(pre(2 * h + j));
      gt(3 * h + j) = sigm(pre(3 * h + j));
      const double c = gt(h + j) * c_prev(j) + gt(j) * gt(2 * h + j);
      const double tc = std::tanh(c);
      trace->cell(t, j) = c;
      trace->cell_tanh(t, j) = tc;
      trace->hidden(t, j) = gt(3 * h + j) * tc;
    }
    h_prev = trace->hidden.row(t);
    c_prev = trace->cell.row(t);
  }
  Tensor out({xv.rows(), hs});
  as_matrix(out) = trace->hidden;
  const Tensor *xp = &xv, *wip = &wi, *whp = &wh;
  return x.graph().record(
      std::move(out), {x, w_ih, w_hh, bias},
      [trace, xp, wip, whp, n, h, reverse](const Tensor&, const Tensor& go,
                                           std::span<Tensor*> grads) {
        auto G = as_matrix(go);
        auto WH = as_matrix(*whp);
        RowMatrix dz(n, 4 * h);
        Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(h);
        Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(h);
        RowMatrix dwhh = RowMatrix::Zero(h, 4 * h);
        for (Eigen::Index s = n; s-- > 0;) {
          const Eigen::Index t = reverse ? n - 1 - s : s;
          const bool first = s == 0;
          const Eigen::Index prev = reverse ? t + 1 : t - 1;
          auto gt = trace->gates.row(t);
          for (Eigen::Index j = 0; j < h; ++j) {
            const double dh = G(t, j) + dh_next(j);
            const double i = gt(j), f = gt(h + j), g = gt(2 * h + j), o = gt(3 * h + j);
            const double tc = trace->cell_tanh(t, j);
            const double dc = dh * o * (1.0 - tc * tc) + dc_next(j);
            const double c_prev = first ? 0.0 : trace->cell(prev, j);
            dz(t, j) = dc * g * i * (1.0 - i);
            dz(t, h + j) = dc * c_prev * f * (1.0 - f);
            dz(t, 2 * h + j) = dc * i * (1.0 - g * g);
            dz(t, 3 * h + j) = dh * tc * o * (1.0 - o);
            dc_next(j) = dc * f;
          }
          dh_next.noalias() = dz.row(t) * WH.transpose();
          if (!first) dwhh.noalias() += trace->hidden.row(prev).transpose() * dz.row(t);
        }
        if (grads[0]) as_matrix(*grads[0]).noalias() += dz * as_matrix(*wip).transpose();
        if (grads[1]) as_matrix(*grads[1]).noalias() += as_matrix(*xp).transpose() * dz;
        if (grads[2]) as_matrix(*grads[2]) += dwhh;
        if (grads[3]) {
          Eigen::Map<Eigen::RowVectorXd> gb(grads[3]->data(), 4 * h);
          gb += dz.colwise().sum();
        }
      });
}

}  // namespace crowdtag
