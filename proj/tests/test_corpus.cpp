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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "crowdtag/corpus.hpp"
#include "crowdtag/error.hpp"
#include "crowdtag/tags.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crowdtag;

namespace {

constexpr Polarity P = Polarity::kPos;
constexpr Polarity N = Polarity::kNeg;

CrowdCorpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_corpus_jsonl(in);
}

std::string serialize(const CrowdCorpus& c) {
  std::ostringstream out;
  write_corpus_jsonl(c, out);
  return out.str();
}

// Annotation from a per-token vote string: '.' = O, 'P' = POS, 'N' = NEG.
Annotation from_votes(const std::string& id, const std::string& votes) {
  Annotation a{id, {}};
  for (std::size_t i = 0; i < votes.size();) {
    if (votes[i] == '.') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < votes.size() && votes[j] == votes[i]) ++j;
    a.spans.push_back({i, j, votes[i] == 'P' ? P : N});
    i = j;
  }
  return a;
}

CrowdCorpus make_corpus(const std::vector<std::vector<Annotation>>& sentences, std::size_t n) {
  CrowdCorpus c;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    CorpusEntry e;
    e.sentence.id = "s" + std::to_string(i);
    e.sentence.tokens.assign(n, "t");
    e.annotations = sentences[i];
    for (const auto& a : e.annotations) c.registry.add(a.annotator);
    c.entries.push_back(e);
  }
  return c;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("empty input gives an empty corpus") {
  CHECK(parse("").empty());
  CHECK(parse("\n\n").empty());
}

TEST_CASE("a one-sentence corpus round-trips byte-identically") {
  const std::string line =
      R"({"id":"x1","text":["a","b","c","d"],"annotations":[{"annotator":"w1","spans":)"
      R"([{"start":1,"end":3,"polarity":"NEG"}]}],"gold":{"spans":[{"start":0,"end":2,"polarity":"POS"}]}})"
      "\n";
  CrowdCorpus c = parse(line);
  validate(c);
  REQUIRE(c.size() == 1);
  CHECK(c.entries[0].annotations[0].spans == std::vector<Span>{{1, 3, N}});
  REQUIRE(c.entries[0].gold.has_value());
  CHECK(serialize(c) == line);
  CHECK(serialize(parse(serialize(c))) == serialize(c));
}

TEST_CASE("malformed lines report their line number") {
  const std::string text =
      "{\"id\":\"a\",\"text\":[\"x\"],\"annotations\":[]}\n"
      "{\"id\":\"b\",\"text\":[\"x\"],\"annotations\":[{\"annotator\":\"w\",\"spans\":[{\"start\":0}]}]}\n";
  try {
    parse(text);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("not json\n"), FormatError);
  CHECK_THROWS_AS(
      parse(R"({"id":"a","text":["x"],"annotations":[{"annotator":"w","spans":[{"start":0,"end":1,"polarity":"MAYBE"}]}]})"),
      FormatError);
}

TEST_CASE("spans past the sentence end or overlapping fail validation") {
  CrowdCorpus c = parse(
      R"({"id":"a","text":["x","y"],"annotations":[{"annotator":"w","spans":[{"start":1,"end":3,"polarity":"POS"}]}]})");
  CHECK_THROWS_AS(validate(c), ValidationError);
  CrowdCorpus d = parse(
      R"({"id":"a","text":["x","y","z"],"annotations":[{"annotator":"w","spans":[{"start":0,"end":2,"polarity":"POS"},{"start":1,"end":3,"polarity":"NEG"}]}]})");
  try {
    validate(d);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'a'") != std::string::npos);
    CHECK(msg.find("'w'") != std::string::npos);
  }
}

TEST_CASE("save and load through files keep registry indices") {
  const auto dir = std::filesystem::temp_directory_path() / "crowdtag_corpus_io";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  CrowdCorpus c = make_corpus({{from_votes("zed", ".PP"), from_votes("amy", "NN.")}}, 3);
  save_corpus(c, dir / "train.jsonl");
  CrowdCorpus back = load_split(dir, "train");
  CHECK(back.registry.ids() == std::vector<std::string>{"zed", "amy"});
  CHECK(back == c);
  std::ifstream f1(dir / "train.jsonl");
  std::stringstream s1;
  s1 << f1.rdbuf();
  save_corpus(back, dir / "train.jsonl");
  std::ifstream f2(dir / "train.jsonl");
  std::stringstream s2;
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK_THROWS_AS(load_split(dir, "missing"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("unknown annotators are listed in the error") {
  AnnotatorRegistry r({"a", "b"});
  try {
    r.index_of("c");
    FAIL("expected an error");
  } catch (const UnknownAnnotatorError& e) {
    CHECK(std::string(e.what()).find("a, b") != std::string::npos);
  }
}

TEST_CASE("majority vote examples") {
  Annotation mv = majority_vote(
      {from_votes("A", ".PP.."), from_votes("B", ".PPP."), from_votes("C", "..PP.")}, 5);
  CHECK(mv.spans == std::vector<Span>{{1, 4, P}});
  CHECK(majority_vote({from_votes("A", "N.PP")}, 4).spans == from_votes("A", "N.PP").spans);
  CHECK(majority_vote({from_votes("A", "P"), from_votes("B", ".")}, 1).spans.empty());
  CHECK(majority_vote({from_votes("A", "P"), from_votes("B", "N")}, 1).spans ==
        std::vector<Span>{{0, 1, N}});
  CHECK_THROWS_AS(majority_vote({}, 3), ValidationError);
}

TEST_CASE("majority vote is permutation invariant and idempotent on copies") {
  std::mt19937_64 rng(5);
  const char alphabet[] = {'.', 'P', 'N'};
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<Annotation> anns;
    for (int a = 0; a < 4; ++a) {
      std::string v;
      for (std::size_t i = 0; i < n; ++i) v += alphabet[rng() % 3];
      anns.push_back(from_votes("w" + std::to_string(a), v));
    }
    const auto base = majority_vote(anns, n).spans;
    std::shuffle(anns.begin(), anns.end(), rng);
    CHECK(majority_vote(anns, n).spans == base);
    std::vector<Annotation> copies(1 + k % 4, anns[0]);
    CHECK(majority_vote(copies, n).spans == anns[0].spans);
  }
}

TEST_CASE("kappa: perfect agreement, chance agreement, symmetry") {
  CrowdCorpus same = make_corpus({{from_votes("a", ".PP.N"), from_votes("b", ".PP.N")},
                                 {from_votes("a", "NN..."), from_votes("b", "NN...")}},
                                5);
  CHECK(pairwise_kappa(same, false) == doctest::Approx(1.0));

  // a = [O, O, B-POS, B-POS], b = [O, B-POS, O, B-POS]: p_o = 1/2 and
  // p_e = (1/2)(1/2) + (1/2)(1/2) = 1/2, so kappa = 0.
  CrowdCorpus chance = make_corpus({{from_votes("a", "..PP"), from_votes("b", ".P.P")}}, 4);
  chance.entries[0].annotations[0].spans = {{2, 3, P}, {3, 4, P}};
  CHECK(pairwise_kappa(chance, false) == doctest::Approx(0.0));

  std::mt19937_64 rng(8);
  const char alphabet[] = {'.', 'P', 'N'};
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + rng() % 8;
    std::string va, vb;
    for (std::size_t i = 0; i < n; ++i) va += alphabet[rng() % 3], vb += alphabet[rng() % 3];
    CrowdCorpus ab = make_corpus({{from_votes("a", va), from_votes("b", vb)}}, n);
    CrowdCorpus ba = make_corpus({{from_votes("b", vb), from_votes("a", va)}}, n);
    const double k1 = pairwise_kappa(ab, false);
    CHECK(k1 == doctest::Approx(pairwise_kappa(ba, false)).epsilon(1e-12));
    std::vector<int> la, lb;
    for (Tag t : encode_tags(from_votes("a", va).spans, n)) la.push_back(static_cast<int>(t));
    for (Tag t : encode_tags(from_votes("b", vb).spans, n)) lb.push_back(static_cast<int>(t));
    CHECK(k1 == doctest::Approx(oracle::kappa(la, lb, 5)).epsilon(1e-12));
  }
}

TEST_CASE("kappa ignoring all-O tokens and insufficient overlap") {
  // Tokens 0 and 4 are O for both and get dropped.
  CrowdCorpus c = make_corpus({{from_votes("a", ".PP.."), from_votes("b", ".PPN.")}}, 5);
  std::vector<int> la{1, 2, 0}, lb{1, 2, 3};
  CHECK(pairwise_kappa(c, true) == doctest::Approx(oracle::kappa(la, lb, 5)).epsilon(1e-12));
  CrowdCorpus single = make_corpus({{from_votes("a", ".P")}}, 2);
  CHECK_THROWS_AS(pairwise_kappa(single, false), InsufficientOverlapError);
}

TEST_CASE("stats of an empty corpus are zero and counts add up") {
  StatsReport empty = corpus_stats(CrowdCorpus{});
  CHECK(empty.sentences == 0);
  CHECK(empty.annotations == 0);
  CHECK(empty.avg_span_length == 0.0);
  CrowdCorpus c = make_corpus(
      {{from_votes("a", ".PP.N"), from_votes("b", "NNN..")}, {from_votes("a", "P....")}}, 5);
  StatsReport s = corpus_stats(c);
  CHECK(s.sentences == 2);
  CHECK(s.annotations == 3);
  CHECK(s.positive == 2);
  CHECK(s.negative == 2);
  CHECK(s.annotators == 2);
  CHECK(s.avg_span_length == doctest::Approx(7.0 / 4.0));
  CHECK(s.avg_annotators_per_sentence == doctest::Approx(1.5));
  CHECK(s.avg_sentences_per_annotator == doctest::Approx(1.5));
}

TEST_CASE("aggregation keeps gold and is idempotent") {
  CrowdCorpus c = make_corpus({{from_votes("a", ".PP.N"), from_votes("b", ".PP..")}}, 5);
  c.entries[0].gold = std::vector<Span>{{1, 3, P}};
  CrowdCorpus mv = aggregate_majority_vote(c);
  validate(mv);
  CHECK(mv.entries[0].gold == c.entries[0].gold);
  CHECK(mv.entries[0].annotations.size() == 1);
  CHECK(aggregate_majority_vote(mv) == mv);
}

}  // TEST_SUITE
