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

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "crowdtag/annotation.hpp"

namespace crowdtag {

// Spans of one sentence on both sides of a comparison.
struct SpanPair {
  std::string sentence_id;
  std::vector<Span> gold;
  std::vector<Span> pred;
};

enum class MatchMode { kExact, kProportional, kBinary };
inline constexpr std::array<MatchMode, 3> kMatchModes = {
    MatchMode::kExact, MatchMode::kProportional, MatchMode::kBinary};
const char* match_mode_name(MatchMode m);

// Micro-averaged counts. For exact and binary matching the credits are
// integers; proportional credits are summed overlap ratios.
struct MatchCounts {
  double pred_credit = 0.0;
  double gold_credit = 0.0;
  std::size_t pred_spans = 0;
  std::size_t gold_spans = 0;

  MatchCounts& operator+=(const MatchCounts& o);
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Prf to_prf(const MatchCounts& c);
// 2PR/(P+R), 0 when P+R = 0.
double f1_score(double precision, double recall);

// Per-sentence credits under one matching mode.
MatchCounts match_sentence(const std::vector<Span>& gold,
                           const std::vector<Span>& pred, MatchMode mode);

// Corpus-wide micro averages. Throws ValidationError when two entries share a
// sentence id.
MatchCounts match_corpus(const std::vector<SpanPair>& pairs, MatchMode mode);
Prf exact_prf(const std::vector<SpanPair>& pairs);
Prf proportional_prf(const std::vector<SpanPair>& pairs);
Prf binary_prf(const std::vector<SpanPair>& pairs);

// Pairs gold and predicted span lists keyed by sentence id; throws
// ValidationError when the id sets differ.
std::vector<SpanPair> align_by_sentence(
    const std::vector<std::pair<std::string, std::vector<Span>>>& gold,
    const std::vector<std::pair<std::string, std::vector<Span>>>& pred);

struct EvalReport {
  std::array<Prf, 3> scores;          // indexed by MatchMode
  std::array<MatchCounts, 3> counts;  // indexed by MatchMode
  std::size_t gold_spans = 0;
  std::size_t pred_spans = 0;

  const Prf& at(MatchMode m) const { return scores[static_cast<std::size_t>(m)]; }
};

EvalReport evaluate(const std::vector<SpanPair>& pairs);

// Exact-match breakdowns. Length buckets 1..6 and 7+ (index 6); spans land in
// the bucket of their own length, so a gold span and its exact match always
// share a bucket.
inline constexpr std::size_t kLengthBuckets = 7;
enum class SentenceCategory { kOne, kMultiSamePolarity, kMultiContraPolarity };
inline constexpr std::size_t kCategoryCount = 3;
const char* category_name(SentenceCategory c);
std::size_t length_bucket(std::size_t span_length);

struct BreakdownReport {
  std::array<MatchCounts, kLengthBuckets> length;
  std::array<MatchCounts, kCategoryCount> category;
  // Sentences per category; sentences without gold spans are not counted.
  std::array<std::size_t, kCategoryCount> category_sentences{};

  Prf length_prf(std::size_t bucket) const { return to_prf(length[bucket]); }
  Prf category_prf(SentenceCategory c) const {
    return to_prf(category[static_cast<std::size_t>(c)]);
  }
};

// Category of a sentence from its gold spans; false when it has none.
bool categorize(const std::vector<Span>& gold, SentenceCategory& out);

BreakdownReport breakdown(const std::vector<SpanPair>& pairs);

}  // namespace crowdtag
