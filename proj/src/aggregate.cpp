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

#include <array>
#include <map>

#include "crowdtag/corpus.hpp"
#include "crowdtag/error.hpp"
#include "crowdtag/tags.hpp"

namespace crowdtag {

namespace {

// Vote classes: 0 = O, 1 = POS, 2 = NEG.
constexpr int kVoteO = 0, kVotePos = 1, kVoteNeg = 2;

}  // namespace

Annotation majority_vote(const std::vector<Annotation>& annotations,
                         std::size_t length) {
  if (annotations.empty()) throw ValidationError("majority_vote needs at least one annotation");
  std::vector<std::array<int, 3>> votes(length, {0, 0, 0});
  for (const auto& a : annotations) {
    validate_spans(a.spans, length, "majority_vote, annotator '" + a.annotator + "'");
    std::vector<int> cls(length, kVoteO);
    for (const auto& s : a.spans) {
      for (std::size_t i = s.start; i < s.end; ++i) {
        cls[i] = s.polarity == Polarity::kPos ? kVotePos : kVoteNeg;
      }
    }
    for (std::size_t i = 0; i < length; ++i) ++votes[i][cls[i]];
  }

  Annotation out{kMajorityVoteAnnotator, {}};
  int prev = kVoteO;
  for (std::size_t i = 0; i < length; ++i) {
    const auto& v = votes[i];
    const int best = std::max({v[0], v[1], v[2]});
    int winner;
    if (v[kVoteO] == best) {
      winner = kVoteO;
    } else if (v[kVoteNeg] == best) {
      winner = kVoteNeg;
    } else {
      winner = kVotePos;
    }
    if (winner != kVoteO) {
      if (winner == prev) {
        out.spans.back().end = i + 1;
      } else {
        out.spans.push_back({i, i + 1, winner == kVotePos ? Polarity::kPos : Polarity::kNeg});
      }
    }
    prev = winner;
  }
  return out;
}

CrowdCorpus aggregate_majority_vote(const CrowdCorpus& corpus) {
  CrowdCorpus out;
  out.registry.add(kMajorityVoteAnnotator);
  out.entries.reserve(corpus.size());
  for (const auto& e : corpus.entries) {
    CorpusEntry agg{e.sentence, {}, e.gold};
    if (!e.annotations.empty()) {
      agg.annotations.push_back(majority_vote(e.annotations, e.sentence.size()));
    }
    out.entries.push_back(std::move(agg));
  }
  return out;
}

double pairwise_kappa(const CrowdCorpus& corpus, bool ignore_all_o) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& e : corpus.entries) {
    if (e.annotations.size() < 2) continue;
    const std::size_t n = e.sentence.size();
    std::vector<std::vector<Tag>> labels;
    for (const auto& a : e.annotations) labels.push_back(encode_tags(a.spans, n));

    std::vector<std::size_t> tokens;
    for (std::size_t i = 0; i < n; ++i) {
      bool all_o = true;
      for (const auto& l : labels) all_o = all_o && l[i] == Tag::kO;
      if (!ignore_all_o || !all_o) tokens.push_back(i);
    }
    if (tokens.empty()) continue;

    const auto count = static_cast<long long>(tokens.size());
    double sentence_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < labels.size(); ++a) {
      for (std::size_t b = a + 1; b < labels.size(); ++b) {
        std::array<long long, kTagCount> na{}, nb{};
        long long agree = 0;
        for (auto i : tokens) {
          ++na[tag_index(labels[a][i])];
          ++nb[tag_index(labels[b][i])];
          agree += labels[a][i] == labels[b][i];
        }
        long long chance = 0;
        for (std::size_t c = 0; c < kTagCount; ++c) chance += na[c] * nb[c];
        // kappa = (N*agree - chance) / (N^2 - chance), exact in integers.
        const long long denom = count * count - chance;
        sentence_sum += denom == 0
                            ? 1.0
                            : static_cast<double>(count * agree - chance) /
                                  static_cast<double>(denom);
        ++pairs;
      }
    }
    total += sentence_sum / static_cast<double>(pairs);
    ++counted;
  }
  if (counted == 0) {
    throw InsufficientOverlapError(
        "no sentence has two or more annotations to compare");
  }
  return total / static_cast<double>(counted);
}

StatsReport corpus_stats(const CrowdCorpus& corpus, AnnotationSource source) {
  StatsReport r;
  r.sentences = corpus.size();
  std::size_t span_tokens = 0;
  std::map<std::string, std::size_t> per_annotator;
  auto count_spans = [&](const std::vector<Span>& spans) {
    for (const auto& s : spans) {
      (s.polarity == Polarity::kPos ? r.positive : r.negative) += 1;
      span_tokens += s.length();
    }
  };
  for (const auto& e : corpus.entries) {
    if (source == AnnotationSource::kGold) {
      if (!e.gold) continue;
      ++r.annotations;
      count_spans(*e.gold);
      continue;
    }
    for (const auto& a : e.annotations) {
      ++r.annotations;
      ++per_annotator[a.annotator];
      count_spans(a.spans);
    }
  }
  r.annotators = per_annotator.size();
  const std::size_t spans = r.positive + r.negative;
  if (spans) r.avg_span_length = static_cast<double>(span_tokens) / static_cast<double>(spans);
  if (source == AnnotationSource::kCrowd) {
    if (r.sentences) {
      r.avg_annotators_per_sentence =
          static_cast<double>(r.annotations) / static_cast<double>(r.sentences);
    }
    if (r.annotators) {
      r.avg_sentences_per_annotator =
          static_cast<double>(r.annotations) / static_cast<double>(r.annotators);
    }
  }
  return r;
}

}  // namespace crowdtag
