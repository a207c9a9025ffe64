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
#include <span>
#include <vector>

#include "crowdtag/autodiff.hpp"
#include "crowdtag/tensor.hpp"

namespace crowdtag {

// Linear-chain CRF scoring with explicit start and end scores:
//   score(y) = start[y0] + sum_i emit[i, y_i] + sum_i trans[y_i, y_{i+1}] + end[y_{n-1}]
// emissions are n x T, transitions T x T (row = from), start/end length T.
struct CrfScores {
  const Tensor& emissions;
  const Tensor& transitions;
  const Tensor& start;
  const Tensor& end;
};

// Throws ShapeError on inconsistent shapes or a label sequence of the wrong
// length or range.
void check_crf_shapes(const CrfScores& s, std::span<const std::size_t> labels);

double crf_sequence_score(const CrfScores& s, std::span<const std::size_t> labels);

// log sum_y exp(score(y)) by the forward algorithm in log space.
double crf_log_partition(const CrfScores& s);

// Highest-scoring label sequence. Backpointer ties go to the lowest tag index.
std::vector<std::size_t> viterbi(const CrfScores& s);

// -log p(labels) = log Z - score(labels). The backward pass uses
// forward-backward marginals.
Var crf_nll(Var emissions, Var transitions, Var start, Var end,
            std::vector<std::size_t> labels);

}  // namespace crowdtag
