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

#include "crowdtag/crf.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "crowdtag/error.hpp"

namespace crowdtag {

void check_crf_shapes(const CrfScores& s, std::span<const std::size_t> labels) {
  const Tensor& e = s.emissions;
  if (e.rank() != 2) throw ShapeError("crf: emissions must be rank 2, got " + shape_string(e.shape()));
  const std::size_t t = e.cols();
  if (s.transitions.shape() != Shape{t, t}) {
    throw ShapeError("crf transitions", shape_string(e.shape()),
                     shape_string(s.transitions.shape()));
  }
  if (s.start.shape() != Shape{t} || s.end.shape() != Shape{t}) {
    throw ShapeError("crf start/end", shape_string(s.start.shape()),
                     shape_string(s.end.shape()));
  }
  if (!labels.empty()) {
    if (labels.size() != e.rows()) {
      throw ShapeError("crf: " + std::to_string(labels.size()) + " labels for " +
                       std::to_string(e.rows()) + " positions");
    }
    for (auto y : labels) {
      if (y >= t) throw ShapeError("crf: label " + std::to_string(y) + " out of range");
    }
  }
}

double crf_sequence_score(const CrfScores& s, std::span<const std::size_t> labels) {
  check_crf_shapes(s, labels);
  if (labels.empty()) throw ShapeError("crf: empty label sequence");
  double score = s.start[labels[0]] + s.end[labels.back()];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    score += s.emissions.at(i, labels[i]);
    if (i + 1 < labels.size()) score += s.transitions.at(labels[i], labels[i + 1]);
  }
  return score;
}

namespace {

// alpha[i][j]: log-sum of scores of prefixes ending in tag j at position i,
// including emissions up to i.
std::vector<double> forward_table(const CrfScores& s) {
  const std::size_t n = s.emissions.rows(), t = s.emissions.cols();
  std::vector<double> alpha(n * t);
  std::vector<double> buf(t);
  for (std::size_t j = 0; j < t; ++j) alpha[j] = s.start[j] + s.emissions.at(0, j);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t k = 0; k < t; ++k) buf[k] = alpha[(i - 1) * t + k] + s.transitions.at(k, j);
      alpha[i * t + j] = logsumexp(buf) + s.emissions.at(i, j);
    }
  }
  return alpha;
}

// beta[i][j]: log-sum of scores of suffixes after position i given tag j at i,
// including the end score.
std::vector<double> backward_table(const CrfScores& s) {
  const std::size_t n = s.emissions.rows(), t = s.emissions.cols();
  std::vector<double> beta(n * t);
  std::vector<double> buf(t);
  for (std::size_t j = 0; j < t; ++j) beta[(n - 1) * t + j] = s.end[j];
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t k = 0; k < t; ++k) {
        buf[k] = s.transitions.at(j, k) + s.emissions.at(i + 1, k) + beta[(i + 1) * t + k];
      }
      beta[i * t + j] = logsumexp(buf);
    }
  }
  return beta;
}

double log_partition_from(const CrfScores& s, const std::vector<double>& alpha) {
  const std::size_t n = s.emissions.rows(), t = s.emissions.cols();
  std::vector<double> buf(t);
  for (std::size_t j = 0; j < t; ++j) buf[j] = alpha[(n - 1) * t + j] + s.end[j];
  return logsumexp(buf);
}

}  // namespace

double crf_log_partition(const CrfScores& s) {
  check_crf_shapes(s, {});
  return log_partition_from(s, forward_table(s));
}

std::vector<std::size_t> viterbi(const CrfScores& s) {
  check_crf_shapes(s, {});
  const std::size_t n = s.emissions.rows(), t = s.emissions.cols();
  std::vector<double> best(t), next(t);
  std::vector<std::size_t> back(n * t, 0);
  for (std::size_t j = 0; j < t; ++j) best[j] = s.start[j] + s.emissions.at(0, j);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      std::size_t arg = 0;
      double top = best[0] + s.transitions.at(0, j);
      for (std::size_t k = 1; k < t; ++k) {
        const double v = best[k] + s.transitions.at(k, j);
        if (v > top) {
          top = v;
          arg = k;
        }
      }
      next[j] = top + s.emissions.at(i, j);
      back[i * t + j] = arg;
    }
    best.swap(next);
  }
  std::size_t last = 0;
  double top = best[0] + s.end[0];
  for (std::size_t j = 1; j < t; ++j) {
    if (best[j] + s.end[j] > top) {
      top = best[j] + s.end[j];
      last = j;
    }
  }
  std::vector<std::size_t> path(n);
  path[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) path[i - 1] = back[i * t + path[i]];
  return path;
}

Var crf_nll(Var emissions, Var transitions, Var start, Var end,
            std::vector<std::size_t> labels) {
  const CrfScores s{emissions.value(), transitions.value(), start.value(), end.value()};
  check_crf_shapes(s, labels);
  if (labels.empty()) throw ShapeError("crf: empty label sequence");
  auto alpha = std::make_shared<std::vector<double>>(forward_table(s));
  const double log_z = log_partition_from(s, *alpha);
  const double nll = log_z - crf_sequence_score(s, labels);

  const Tensor *ep = &s.emissions, *tp = &s.transitions, *sp = &s.start, *np = &s.end;
  return emissions.graph().record(
      Tensor::scalar(nll), {emissions, transitions, start, end},
      [alpha, log_z, labels = std::move(labels), ep, tp, sp, np](
          const Tensor&, const Tensor& go, std::span<Tensor*> grads) {
        const CrfScores s{*ep, *tp, *sp, *np};
        const double g = go.item();
        const std::size_t n = ep->rows(), t = ep->cols();
        const auto beta = backward_table(s);
        // Unary marginals feed emissions, start and end.
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < t; ++j) {
            const double p = std::exp((*alpha)[i * t + j] + beta[i * t + j] - log_z);
            if (grads[0]) grads[0]->at(i, j) += g * p;
            if (i == 0 && grads[2]) (*grads[2])[j] += g * p;
            if (i + 1 == n && grads[3]) (*grads[3])[j] += g * p;
          }
        }
        if (grads[1]) {
          for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t a = 0; a < t; ++a) {
              for (std::size_t b = 0; b < t; ++b) {
                const double p = std::exp((*alpha)[i * t + a] + tp->at(a, b) +
                                          ep->at(i + 1, b) + beta[(i + 1) * t + b] - log_z);
                grads[1]->at(a, b) += g * p;
              }
            }
          }
        }
        // Minus the observed path.
        for (std::size_t i = 0; i < n; ++i) {
          if (grads[0]) grads[0]->at(i, labels[i]) -= g;
          if (i + 1 < n && grads[1]) grads[1]->at(labels[i], labels[i + 1]) -= g;
        }
        if (grads[2]) (*grads[2])[labels[0]] -= g;
        if (grads[3]) (*grads[3])[labels[n - 1]] -= g;
      });
}

}  // namespace crowdtag
