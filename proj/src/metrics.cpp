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

#include "crowdtag/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "crowdtag/error.hpp"

namespace crowdtag {

const char* match_mode_name(MatchMode m) {
  switch (m) {
    case MatchMode::kExact: return "exact";
    case MatchMode::kProportional: return "proportional";
    default: return "binary";
  }
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  pred_credit += o.pred_credit;
  gold_credit += o.gold_credit;
  pred_spans += o.pred_spans;
  gold_spans += o.gold_spans;
  return *this;
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0 ? 2.0 * precision * recall / s : 0.0;
}

Prf to_prf(const MatchCounts& c) {
  Prf r;
  if (c.pred_spans) r.precision = c.pred_credit / static_cast<double>(c.pred_spans);
  if (c.gold_spans) r.recall = c.gold_credit / static_cast<double>(c.gold_spans);
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

namespace {

std::size_t same_polarity_overlap(const Span& a, const Span& b) {
  return a.polarity == b.polarity ? overlap(a, b) : 0;
}

// Largest same-polarity overlap of `s` with any span of `others`.
std::size_t best_overlap(const Span& s, const std::vector<Span>& others) {
  std::size_t best = 0;
  for (const auto& o : others) best = std::max(best, same_polarity_overlap(s, o));
  return best;
}

}  // namespace

MatchCounts match_sentence(const std::vector<Span>& gold,
                           const std::vector<Span>& pred, MatchMode mode) {
  MatchCounts c;
  c.gold_spans = gold.size();
  c.pred_spans = pred.size();
  switch (mode) {
    case MatchMode::kExact: {
      // One-to-one: each gold span absorbs at most one identical prediction.
      std::vector<bool> used(gold.size(), false);
      std::size_t matched = 0;
      for (const auto& p : pred) {
        for (std::size_t g = 0; g < gold.size(); ++g) {
          if (!used[g] && gold[g] == p) {
            used[g] = true;
            ++matched;
            break;
          }
        }
      }
      c.pred_credit = c.gold_credit = static_cast<double>(matched);
      break;
    }
    case MatchMode::kProportional:
      for (const auto& p : pred) {
        c.pred_credit += static_cast<double>(best_overlap(p, gold)) /
                         static_cast<double>(p.length());
      }
      for (const auto& g : gold) {
        c.gold_credit += static_cast<double>(best_overlap(g, pred)) /
                         static_cast<double>(g.length());
      }
      break;
    case MatchMode::kBinary:
      for (const auto& p : pred) c.pred_credit += best_overlap(p, gold) > 0 ? 1.0 : 0.0;
      for (const auto& g : gold) c.gold_credit += best_overlap(g, pred) > 0 ? 1.0 : 0.0;
      break;
  }
  return c;
}

MatchCounts match_corpus(const std::vector<SpanPair>& pairs, MatchMode mode) {
  std::set<std::string> ids;
  MatchCounts total;
  for (const auto& p : pairs) {
    if (!ids.insert(p.sentence_id).second) {
      throw ValidationError("sentence '" + p.sentence_id + "' appears twice in evaluation");
    }
    total += match_sentence(p.gold, p.pred, mode);
  }
  return total;
}

Prf exact_prf(const std::vector<SpanPair>& pairs) {
  return to_prf(match_corpus(pairs, MatchMode::kExact));
}
Prf proportional_prf(const std::vector<SpanPair>& pairs) {
  return to_prf(match_corpus(pairs, MatchMode::kProportional));
}
Prf binary_prf(const std::vector<SpanPair>& pairs) {
  return to_prf(match_corpus(pairs, MatchMode::kBinary));
}

std::vector<SpanPair> align_by_sentence(
    const std::vector<std::pair<std::string, std::vector<Span>>>& gold,
    const std::vector<std::pair<std::string, std::vector<Span>>>& pred) {
  std::map<std::string, const std::vector<Span>*> by_id;
  for (const auto& [id, spans] : pred) {
    if (!by_id.emplace(id, &spans).second) {
      throw ValidationError("prediction for sentence '" + id + "' given twice");
    }
  }
  if (by_id.size() != gold.size()) {
    throw ValidationError("gold and prediction cover different sentence sets (" +
                          std::to_string(gold.size()) + " vs " +
                          std::to_string(by_id.size()) + " sentences)");
  }
  std::vector<SpanPair> out;
  out.reserve(gold.size());
  for (const auto& [id, spans] : gold) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("no prediction for gold sentence '" + id + "'");
    }
    out.push_back({id, spans, *it->second});
  }
  return out;
}

EvalReport evaluate(const std::vector<SpanPair>& pairs) {
  EvalReport r;
  for (auto m : kMatchModes) {
    const auto i = static_cast<std::size_t>(m);
    r.counts[i] = match_corpus(pairs, m);
    r.scores[i] = to_prf(r.counts[i]);
  }
  r.gold_spans = r.counts[0].gold_spans;
  r.pred_spans = r.counts[0].pred_spans;
  return r;
}

const char* category_name(SentenceCategory c) {
  switch (c) {
    case SentenceCategory::kOne: return "O";
    case SentenceCategory::kMultiSamePolarity: return "MOSP";
    default: return "MOCP";
  }
}

std::size_t length_bucket(std::size_t span_length) {
  return std::min(span_length, kLengthBuckets) - 1;
}

bool categorize(const std::vector<Span>& gold, SentenceCategory& out) {
  if (gold.empty()) return false;
  if (gold.size() == 1) {
    out = SentenceCategory::kOne;
    return true;
  }
  const bool mixed = std::any_of(gold.begin(), gold.end(), [&](const Span& s) {
    return s.polarity != gold.front().polarity;
  });
  out = mixed ? SentenceCategory::kMultiContraPolarity
              : SentenceCategory::kMultiSamePolarity;
  return true;
}

BreakdownReport breakdown(const std::vector<SpanPair>& pairs) {
  BreakdownReport r;
  for (const auto& p : pairs) {
    std::array<std::vector<Span>, kLengthBuckets> gold_by_len, pred_by_len;
    for (const auto& s : p.gold) gold_by_len[length_bucket(s.length())].push_back(s);
    for (const auto& s : p.pred) pred_by_len[length_bucket(s.length())].push_back(s);
    for (std::size_t b = 0; b < kLengthBuckets; ++b) {
      r.length[b] += match_sentence(gold_by_len[b], pred_by_len[b], MatchMode::kExact);
    }
    SentenceCategory cat;
    if (categorize(p.gold, cat)) {
      const auto c = static_cast<std::size_t>(cat);
      r.category[c] += match_sentence(p.gold, p.pred, MatchMode::kExact);
      ++r.category_sentences[c];
    }
  }
  return r;
}

}  // namespace crowdtag
