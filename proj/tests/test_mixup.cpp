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

#include "crowdtag/error.hpp"
#include "crowdtag/mixup.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crowdtag;

namespace {

TaggerModel small_model(std::uint64_t seed) {
  ModelConfig c;
  c.model_dim = 8;
  c.layers = 2;
  c.heads = 2;
  c.ff_dim = 8;
  c.adapter_dim = 3;
  c.annotator_dim = 3;
  c.pgn_layers = 1;
  c.lstm_hidden = 4;
  c.mlp_hidden = 5;
  c.max_len = 8;
  TaggerModel m(c, Vocabulary({"<unk>", "a", "b", "c"}), AnnotatorRegistry({"x", "y", "z"}), seed);
  std::mt19937_64 rng(seed);
  oracle::randomize(m.parameters(), rng, 0.5);
  return m;
}

std::vector<Tag> random_tags(std::size_t n, std::mt19937_64& rng) {
  std::vector<Tag> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(tag_from_index(rng() % kTagCount));
  return t;
}

double plain_loss(const TaggerModel& m, const std::vector<std::string>& tokens,
                  const AnnotatorCondition& cond, const std::vector<Tag>& labels) {
  Graph g;
  ParamBinder bind(g, m.parameters(), false);
  return m.instance_loss(bind, m.vocab().ids(tokens), cond, labels).value().item();
}

CrowdCorpus corpus_with(std::vector<std::size_t> annotation_counts) {
  CrowdCorpus c;
  for (int a = 0; a < 6; ++a) c.registry.add("w" + std::to_string(a));
  for (std::size_t i = 0; i < annotation_counts.size(); ++i) {
    CorpusEntry e;
    e.sentence = {"s" + std::to_string(i), {"a", "b", "c"}};
    for (std::size_t a = 0; a < annotation_counts[i]; ++a)
      e.annotations.push_back({"w" + std::to_string(a), {{0, 1 + a % 3, Polarity::kPos}}});
    c.entries.push_back(e);
  }
  return c;
}

}  // namespace

TEST_SUITE("mixup") {

TEST_CASE("lambda draws stay in [0, 1] and are symmetric") {
  std::mt19937_64 rng(1);
  for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
    double sum = 0.0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      const double l = sample_lambda(alpha, rng);
      REQUIRE(l >= 0.0);
      REQUIRE(l <= 1.0);
      sum += l;
    }
    const double mean = sum / draws;
    INFO("alpha " << alpha);
    CHECK(std::abs(mean - 0.5) < 0.01);
  }
  CHECK_THROWS_AS(sample_lambda(0.0, rng), ConfigError);
}

TEST_CASE("pairing") {
  std::mt19937_64 rng(2);
  CHECK(pair_instances(corpus_with({1, 1, 0}), {0.5, 3}, rng).empty());

  auto all = pair_instances(corpus_with({4}), {0.5, 6}, rng);
  CHECK(all.size() == 6);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& inst : all) {
    CHECK(inst.first_annotator != inst.second_annotator);
    CHECK(inst.first_labels.size() == 3);
    auto key = std::minmax(inst.first_annotator, inst.second_annotator);
    CHECK(seen.insert(key).second);
  }
  CHECK(pair_instances(corpus_with({5}), {0.5, 100}, rng).size() == 10);
  CHECK(pair_instances(corpus_with({5, 2, 3}), {0.5, 1}, rng).size() == 3);

  std::mt19937_64 r1(9), r2(9);
  auto a = pair_instances(corpus_with({3, 4, 5}), {0.5, 2}, r1);
  auto b = pair_instances(corpus_with({3, 4, 5}), {0.5, 2}, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first_annotator == b[i].first_annotator);
    CHECK(a[i].lambda == b[i].lambda);
  }
}

TEST_CASE("mixing weights swap exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double l = u(rng);
    const auto [a, b] = mix_weights(l);
    const auto [c, d] = mix_weights(1.0 - l);
    CHECK(a == d);
    CHECK(b == c);
  }
  CHECK(mix_weights(1.0) == std::pair<double, double>{1.0, 0.0});
  CHECK(mix_weights(0.0) == std::pair<double, double>{0.0, 1.0});
}

TEST_CASE("lambda at the ends reproduces the single-annotator loss bit for bit") {
  std::mt19937_64 rng(4);
  TaggerModel m = small_model(4);
  const std::vector<std::string> tokens{"a", "b", "c", "a"};
  MixupInstance inst{0, "x", "z", random_tags(4, rng), random_tags(4, rng), 1.0};
  CHECK(mixed_loss(m, tokens, inst) ==
        plain_loss(m, tokens, AnnotatorCondition::annotator(0), inst.first_labels));
  inst.lambda = 0.0;
  CHECK(mixed_loss(m, tokens, inst) ==
        plain_loss(m, tokens, AnnotatorCondition::annotator(2), inst.second_labels));
}

TEST_CASE("equal labels give the plain loss under the mixed embedding") {
  std::mt19937_64 rng(5);
  TaggerModel m = small_model(5);
  const std::vector<std::string> tokens{"c", "b"};
  const auto y = random_tags(2, rng);
  for (double l : {0.1, 0.37, 0.5, 0.9}) {
    MixupInstance inst{0, "x", "y", y, y, l};
    CHECK(mixed_loss(m, tokens, inst) ==
          doctest::Approx(plain_loss(m, tokens, AnnotatorCondition::mix(0, 1, l), y))
              .epsilon(1e-13));
  }
}

TEST_CASE("mixed loss equals two independent passes under e_mix") {
  std::mt19937_64 rng(6);
  TaggerModel m = small_model(6);
  const Tensor& table = m.annotator_table();
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 1 + rng() % 5;
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(1, "abc"[rng() % 3]));
    const std::size_t a = rng() % 3, b = (a + 1 + rng() % 2) % 3;
    const double l = std::uniform_real_distribution<double>(0, 1)(rng);
    MixupInstance inst{0, m.registry().id_at(a), m.registry().id_at(b), random_tags(n, rng),
                       random_tags(n, rng), l};
    Tensor e({3});
    for (std::size_t c = 0; c < 3; ++c) e[c] = l * table.at(a, c) + (1 - l) * table.at(b, c);
    const double oracle_loss =
        l * plain_loss(m, tokens, AnnotatorCondition::embedding(e), inst.first_labels) +
        (1 - l) * plain_loss(m, tokens, AnnotatorCondition::embedding(e), inst.second_labels);
    CHECK(std::abs(mixed_loss(m, tokens, inst) - oracle_loss) < 1e-10);
  }
}

TEST_CASE("swapping the pair and lambda gives the same loss exactly") {
  std::mt19937_64 rng(7);
  TaggerModel m = small_model(7);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng() % 5;
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(1, "abc"[rng() % 3]));
    const double l = std::uniform_real_distribution<double>(0, 1)(rng);
    MixupInstance fwd{0, "x", "y", random_tags(n, rng), random_tags(n, rng), l};
    MixupInstance rev{0, "y", "x", fwd.second_labels, fwd.first_labels, 1.0 - l};
    CHECK(mixed_loss(m, tokens, fwd) == mixed_loss(m, tokens, rev));
  }
}

TEST_CASE("unknown annotators are rejected") {
  TaggerModel m = small_model(8);
  MixupInstance inst{0, "x", "nobody", {Tag::kO}, {Tag::kO}, 0.5};
  CHECK_THROWS_AS(mixed_loss(m, {"a"}, inst), UnknownAnnotatorError);
}

TEST_CASE("mixed-loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(200 + seed);
    TaggerModel m = small_model(200 + seed);
    const std::size_t n = 1 + rng() % 4;
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(1, "abc"[rng() % 3]));
    const auto ids = m.vocab().ids(tokens);
    MixupInstance inst{0, "x", "z", random_tags(n, rng), random_tags(n, rng),
                       std::uniform_real_distribution<double>(0, 1)(rng)};
    auto r = oracle::check_model_gradients(
        m.parameters(), [&](ParamBinder& bind) { return mixed_loss(m, bind, ids, inst); });
    INFO("seed " << seed << " worst " << m.parameters()[r.worst_input].name << " "
                  << r.worst_analytic << " vs " << r.worst_numeric);
    CHECK(r.max_rel_error < 1e-4);
  }
}

}  // TEST_SUITE
