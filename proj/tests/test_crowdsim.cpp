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

#include <random>
#include <set>
#include <sstream>

#include "crowdtag/crowdsim.hpp"
#include "crowdtag/error.hpp"
#include "doctest.h"

using namespace crowdtag;

namespace {

std::string dump(const CrowdCorpus& c) {
  std::ostringstream out;
  write_corpus_jsonl(c, out);
  return out.str();
}

SimConfig small_config(std::uint64_t seed) {
  SimConfig c = noisy_benchmark_config(seed);
  c.train_sentences = 200;
  c.dev_sentences = 50;
  c.test_sentences = 50;
  return c;
}

}  // namespace

TEST_SUITE("crowdsim") {

TEST_CASE("zero expressions give empty gold") {
  SimConfig c = zero_noise_config(1);
  c.mean_expressions = 0.0;
  for (const auto& g : generate_gold(c, 50)) CHECK(g.gold.empty());
}

TEST_CASE("gold generation is deterministic and concentrates around the mean") {
  SimConfig c = zero_noise_config(4);
  c.mean_expressions = 2.0;
  const auto a = generate_gold(c, 1000);
  const auto b = generate_gold(c, 1000);
  std::size_t spans = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sentence.tokens == b[i].sentence.tokens);
    CHECK(a[i].gold == b[i].gold);
    validate_spans(a[i].gold, a[i].sentence.tokens.size(), "gold");
    spans += a[i].gold.size();
  }
  CHECK(std::abs(static_cast<double>(spans) - 2000.0) <= 100.0);
}

TEST_CASE("impossible packing is a config error") {
  SimConfig c = zero_noise_config(1);
  c.min_sentence_length = c.max_sentence_length = 3;
  c.mean_expressions = 3.0;
  c.min_expression_length = c.max_expression_length = 5;
  CHECK_THROWS_AS(generate_gold(c, 5), ConfigError);
}

TEST_CASE("corruption edge cases") {
  std::mt19937_64 rng(2);
  const std::vector<Span> gold{{1, 3, Polarity::kPos}, {6, 9, Polarity::kNeg}};
  NoiseProfile clean{"a", 0, 0, 1, 0, 0};
  CHECK(corrupt(gold, clean, 12, rng).spans == gold);
  NoiseProfile missing{"a", 1.0, 0, 1, 0, 0};
  CHECK(corrupt(gold, missing, 12, rng).spans.empty());
  NoiseProfile flipping{"a", 0, 0, 1, 1.0, 0};
  const auto flipped = corrupt(gold, flipping, 12, rng).spans;
  REQUIRE(flipped.size() == 2);
  CHECK(flipped[0] == Span{1, 3, Polarity::kNeg});
  CHECK(flipped[1] == Span{6, 9, Polarity::kPos});
}

TEST_CASE("corrupted annotations stay valid and spurious spans avoid gold") {
  std::mt19937_64 rng(3);
  SimConfig c = zero_noise_config(3);
  NoiseProfile harsh{"a", 0.3, 0.9, 3, 0.3, 2.0};
  for (const auto& g : generate_gold(c, 300)) {
    const std::size_t n = g.sentence.tokens.size();
    const auto out = corrupt(g.gold, harsh, n, rng);
    CHECK_NOTHROW(validate_spans(out.spans, n, "corrupt"));
  }
  NoiseProfile only_spurious{"a", 1.0, 0, 1, 0, 3.0};
  for (const auto& g : generate_gold(c, 300)) {
    const auto out = corrupt(g.gold, only_spurious, g.sentence.tokens.size(), rng);
    for (const auto& s : out.spans)
      for (const auto& gs : g.gold) CHECK(overlap(s, gs) == 0);
  }
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(validate(NoiseProfile{"a", 1.5, 0, 1, 0, 0}), ConfigError);
  CHECK_THROWS_AS(validate(NoiseProfile{"a", 0, 0, 0, 0, 0}), ConfigError);
  CHECK_THROWS_AS(validate(NoiseProfile{"a", 0, 0, 1, 0, -1}), ConfigError);
  SimConfig c = zero_noise_config(1);
  c.max_annotators = 2;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("one noiseless profile copies gold everywhere") {
  SimConfig c = zero_noise_config(5);
  c.train_sentences = 100;
  c.gold_on_train = true;
  const SimulatedCorpus s = generate_corpus(c);
  for (const CrowdCorpus* part : {&s.train, &s.dev, &s.test}) {
    validate(*part);
    for (const auto& e : part->entries) {
      REQUIRE(e.annotations.size() == 1);
      REQUIRE(e.gold.has_value());
      CHECK(e.annotations[0].spans == *e.gold);
    }
  }
}

TEST_CASE("annotators per sentence follow the configured range") {
  SimConfig c = small_config(6);
  c.min_annotators = c.max_annotators = 4;
  const SimulatedCorpus s = generate_corpus(c);
  for (const auto& e : s.train.entries) CHECK(e.annotations.size() == 4);

  const SimulatedCorpus d = generate_corpus(noisy_benchmark_config(7));
  const StatsReport st = corpus_stats(d.train);
  CHECK(st.avg_annotators_per_sentence >= 3.0);
  CHECK(st.avg_annotators_per_sentence <= 5.0);
  CHECK(d.train.registry.size() == 70);
  CHECK_FALSE(d.train.entries[0].gold.has_value());
  CHECK(d.dev.has_gold());
  CHECK(d.test.has_gold());
}

TEST_CASE("corpus generation is deterministic and splits are disjoint") {
  const SimulatedCorpus a = generate_corpus(small_config(8));
  const SimulatedCorpus b = generate_corpus(small_config(8));
  CHECK(dump(a.train) == dump(b.train));
  CHECK(dump(a.test) == dump(b.test));
  const SimulatedCorpus c = generate_corpus(small_config(9));
  CHECK(dump(a.train) != dump(c.train));
  std::set<std::string> ids;
  for (const CrowdCorpus* part : {&a.train, &a.dev, &a.test})
    for (const auto& e : part->entries) CHECK(ids.insert(e.sentence.id).second);
}

TEST_CASE("planted totals match the crowd statistics of a noiseless corpus") {
  SimConfig c = zero_noise_config(10);
  c.train_sentences = 300;
  const SimulatedCorpus s = generate_corpus(c);
  std::size_t pos = 0, neg = 0;
  for (const auto& g : s.train_gold)
    for (const auto& sp : g) (sp.polarity == Polarity::kPos ? pos : neg) += 1;
  const StatsReport st = corpus_stats(s.train);
  CHECK(st.positive == pos);
  CHECK(st.negative == neg);
  CHECK(st.annotations == 300);
}

TEST_CASE("raising the miss probability never adds spans") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::size_t previous = SIZE_MAX;
    for (double miss : {0.0, 0.3, 0.6, 0.9}) {
      SimConfig c = small_config(seed);
      for (auto& p : c.profiles) p.miss_prob = miss;
      const StatsReport st = corpus_stats(generate_corpus(c).train);
      const std::size_t spans = st.positive + st.negative;
      CHECK(spans <= previous);
      previous = spans;
    }
  }
}

}  // TEST_SUITE
