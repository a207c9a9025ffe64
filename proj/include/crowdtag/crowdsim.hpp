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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crowdtag/annotation.hpp"
#include "crowdtag/corpus.hpp"

namespace crowdtag {

// Error behaviour of one simulated annotator.
struct NoiseProfile {
  std::string annotator;
  double miss_prob = 0.0;            // drop a gold span
  double boundary_shift_prob = 0.0;  // per boundary
  std::size_t max_shift = 1;
  double flip_prob = 0.0;            // invert a kept span's polarity
  double spurious_rate = 0.0;        // expected extra spans per sentence

  bool operator==(const NoiseProfile&) const = default;
};

// Throws ConfigError when a probability leaves [0, 1], max_shift is zero or
// the spurious rate is negative.
void validate(const NoiseProfile& profile);

struct SimConfig {
  std::size_t neutral_vocab = 400;
  std::size_t positive_vocab = 120;
  std::size_t negative_vocab = 120;
  // Zipf exponent of token frequencies within each vocabulary; 0 is uniform.
  double zipf_exponent = 1.0;

  std::size_t min_sentence_length = 8;
  std::size_t max_sentence_length = 24;
  // Expressions per sentence ~ Binomial(max_expressions, mean / max).
  double mean_expressions = 1.5;
  std::size_t max_expressions = 3;
  std::size_t min_expression_length = 1;
  std::size_t max_expression_length = 5;
  // Probability that an interior token of an expression is neutral.
  double interior_neutral_prob = 0.15;
  // Neutral tokens required between two expressions.
  std::size_t min_gap = 2;

  std::size_t min_annotators = 3;
  std::size_t max_annotators = 5;
  std::vector<NoiseProfile> profiles;

  std::size_t train_sentences = 1400;
  std::size_t dev_sentences = 300;
  std::size_t test_sentences = 300;
  bool gold_on_train = false;

  std::uint64_t seed = 1;
};

// Throws ConfigError on empty ranges, no profiles, or more annotators per
// sentence than profiles.
void validate(const SimConfig& config);

// `count` profiles a00, a01, ... whose rates scatter around the given means:
// probabilities ~ Beta(mean*spread, (1-mean)*spread), spurious rate ~
// Gamma(spread, mean/spread). spread = 0 gives identical profiles.
std::vector<NoiseProfile> make_profiles(std::size_t count, const NoiseProfile& mean,
                                        double spread, std::uint64_t seed);

// Deterministic child generator for (seed, stream ids...).
std::mt19937_64 derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

struct GoldSentence {
  Sentence sentence;
  std::vector<Span> gold;
};

// `count` sentences with planted expressions. `stream` keeps splits apart.
// Throws ConfigError after 100 failed attempts to pack one sentence.
std::vector<GoldSentence> generate_gold(const SimConfig& config, std::size_t count,
                                        std::uint64_t stream = 0,
                                        const std::string& id_prefix = "s");

// Noisy copy of `gold` as `profile` would annotate it.
Annotation corrupt(const std::vector<Span>& gold, const NoiseProfile& profile,
                   std::size_t length, std::mt19937_64& rng);

struct SimulatedCorpus {
  CrowdCorpus train;
  CrowdCorpus dev;
  CrowdCorpus test;
  // Planted gold spans per split, in sentence order, regardless of whether
  // gold is attached to the split.
  std::vector<std::vector<Span>> train_gold;
};

SimulatedCorpus generate_corpus(const SimConfig& config);

// The noisy benchmark: 70 heterogeneous profiles around miss 0.15, shift
// 0.3, flip 0.05, spurious 0.1, with 3-5 annotators per sentence.
SimConfig noisy_benchmark_config(std::uint64_t seed);
// One annotator that copies gold exactly.
SimConfig zero_noise_config(std::uint64_t seed);

}  // namespace crowdtag
