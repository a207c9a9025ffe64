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
#include <random>
#include <string>
#include <vector>

#include "crowdtag/corpus.hpp"
#include "crowdtag/model.hpp"

namespace crowdtag {

struct MixupConfig {
  double alpha = 0.5;
  // Distinct annotator pairs drawn per sentence each epoch.
  std::size_t pairs_per_sentence = 1;
};

void validate(const MixupConfig& config);

// Two annotations of the same sentence and their interpolation weight.
struct MixupInstance {
  std::size_t entry = 0;  // index into the corpus entries
  std::string first_annotator;
  std::string second_annotator;
  std::vector<Tag> first_labels;
  std::vector<Tag> second_labels;
  double lambda = 0.5;
};

// Beta(alpha, alpha) from two Gamma(alpha, 1) variates.
double sample_lambda(double alpha, std::mt19937_64& rng);

// Up to pairs_per_sentence unordered pairs per sentence, without
// replacement, in corpus order.
std::vector<MixupInstance> pair_instances(const CrowdCorpus& corpus,
                                          const MixupConfig& config,
                                          std::mt19937_64& rng);

// lambda * nll(y1) + (1 - lambda) * nll(y2), both scored against one forward
// pass conditioned on lambda * e[a1] + (1 - lambda) * e[a2]. Throws
// UnknownAnnotatorError when either annotator is not in the model registry.
Var mixed_loss(const TaggerModel& model, ParamBinder& bind,
               const std::vector<std::size_t>& token_ids, const MixupInstance& instance,
               const DropoutContext& dropout = {});
double mixed_loss(const TaggerModel& model, const std::vector<std::string>& tokens,
                  const MixupInstance& instance);

}  // namespace crowdtag
