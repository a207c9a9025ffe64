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

#include "crowdtag/mixup.hpp"

#include "crowdtag/error.hpp"

namespace crowdtag {

void validate(const MixupConfig& config) {
  if (!(config.alpha > 0.0)) throw ConfigError("mixup alpha must be positive");
}

double sample_lambda(double alpha, std::mt19937_64& rng) {
  if (!(alpha > 0.0)) throw ConfigError("mixup alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double x = gamma(rng);
  const double y = gamma(rng);
  // Both draws can underflow to zero for very small alpha.
  if (x + y == 0.0) return std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
  return x / (x + y);
}

std::vector<MixupInstance> pair_instances(const CrowdCorpus& corpus,
                                          const MixupConfig& config,
                                          std::mt19937_64& rng) {
  validate(config);
  std::vector<MixupInstance> out;
  if (config.pairs_per_sentence == 0) return out;
  for (std::size_t e = 0; e < corpus.entries.size(); ++e) {
    const CorpusEntry& entry = corpus.entries[e];
    const auto& anns = entry.annotations;
    if (anns.size() < 2) continue;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < anns.size(); ++i)
      for (std::size_t j = i + 1; j < anns.size(); ++j) pairs.emplace_back(i, j);
    const std::size_t take = std::min(config.pairs_per_sentence, pairs.size());
    // Partial Fisher-Yates: the first `take` slots are a uniform sample.
    for (std::size_t k = 0; k < take; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pairs.size() - 1);
      std::swap(pairs[k], pairs[pick(rng)]);
    }
    const std::size_t n = entry.sentence.tokens.size();
    for (std::size_t k = 0; k < take; ++k) {
      const Annotation& a = anns[pairs[k].first];
      const Annotation& b = anns[pairs[k].second];
      MixupInstance inst;
      inst.entry = e;
      inst.first_annotator = a.annotator;
      inst.second_annotator = b.annotator;
      inst.first_labels = encode_tags(a.spans, n);
      inst.second_labels = encode_tags(b.spans, n);
      inst.lambda = sample_lambda(config.alpha, rng);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

Var mixed_loss(const TaggerModel& model, ParamBinder& bind,
               const std::vector<std::size_t>& token_ids, const MixupInstance& instance,
               const DropoutContext& dropout) {
  const std::size_t a = model.registry().index_of(instance.first_annotator);
  const std::size_t b = model.registry().index_of(instance.second_annotator);
  const AnnotatorCondition cond = AnnotatorCondition::mix(a, b, instance.lambda);
  Var reps = model.encode(bind, token_ids, model.condition_embedding(bind, cond));
  Var em = model.emissions(bind, reps, dropout);
  Var first = model.nll(bind, em, instance.first_labels);
  Var second = model.nll(bind, em, instance.second_labels);
  return add(scale(first, cond.first_weight), scale(second, cond.second_weight));
}

double mixed_loss(const TaggerModel& model, const std::vector<std::string>& tokens,
                  const MixupInstance& instance) {
  Graph g;
  ParamBinder bind(g, model.parameters(), false);
  return mixed_loss(model, bind, model.vocab().ids(tokens), instance).value().item();
}

}  // namespace crowdtag
