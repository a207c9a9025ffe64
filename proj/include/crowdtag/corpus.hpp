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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdtag/annotation.hpp"

namespace crowdtag {

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Dense, stable numbering of annotator ids. Index order is the order of
// registration and is what the model's annotator embedding rows follow.
class AnnotatorRegistry {
 public:
  AnnotatorRegistry() = default;
  explicit AnnotatorRegistry(std::vector<std::string> ids);

  // Registers `id` if new; returns its index either way.
  std::size_t add(const std::string& id);
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  // Throws UnknownAnnotatorError listing the registered ids.
  std::size_t index_of(const std::string& id) const;
  const std::string& id_at(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  friend bool operator==(const AnnotatorRegistry& a, const AnnotatorRegistry& b) {
    return a.ids_ == b.ids_;
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

// A sentence with its crowd annotations and optional expert annotation.
struct CorpusEntry {
  Sentence sentence;
  std::vector<Annotation> annotations;
  std::optional<std::vector<Span>> gold;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CrowdCorpus {
  std::vector<CorpusEntry> entries;
  AnnotatorRegistry registry;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool has_gold() const;
  // Index of the entry with this sentence id, or nullopt.
  std::optional<std::size_t> find(const std::string& sentence_id) const;

  friend bool operator==(const CrowdCorpus&, const CrowdCorpus&) = default;
};

// Throws ValidationError on: empty or duplicate sentence ids, empty token
// lists, unregistered or repeated annotators within a sentence, and spans
// that overlap or do not fit their sentence.
void validate(const CrowdCorpus& corpus);

// Sorts spans by start and each sentence's annotations by registry index.
void canonicalize(CrowdCorpus& corpus);

// JSONL, one sentence per line. When `registry` is empty it is filled in
// order of first appearance; otherwise unknown annotators are an error.
// Throws FormatError carrying the 1-based line number on malformed lines.
CrowdCorpus read_corpus_jsonl(std::istream& in,
                              AnnotatorRegistry registry = {});
void write_corpus_jsonl(const CrowdCorpus& corpus, std::ostream& out);

AnnotatorRegistry read_registry(const std::filesystem::path& path);
void write_registry(const AnnotatorRegistry& registry,
                    const std::filesystem::path& path);

inline constexpr const char* kRegistryFile = "registry.json";

// Loads a JSONL file, using registry.json from the same directory when it
// exists. The result is validated and canonicalized.
CrowdCorpus load_corpus(const std::filesystem::path& path);
// Writes the canonical JSONL and the registry.json sidecar next to it.
void save_corpus(const CrowdCorpus& corpus, const std::filesystem::path& path);

// <dir>/<split>.jsonl with the shared <dir>/registry.json.
CrowdCorpus load_split(const std::filesystem::path& dir, const std::string& split);

// ---------------------------------------------------------------------------
// Aggregation and statistics.

inline constexpr const char* kMajorityVoteAnnotator = "MV";

// Token-level plurality over {O, POS, NEG}, then contiguous same-polarity
// winners merged into spans. Ties that include O go to O; a POS/NEG tie goes
// to NEG. Throws ValidationError when `annotations` is empty.
Annotation majority_vote(const std::vector<Annotation>& annotations,
                         std::size_t length);

// Replaces every sentence's crowd annotations with their majority vote.
// Sentences without annotations are kept unannotated.
CrowdCorpus aggregate_majority_vote(const CrowdCorpus& corpus);

// Cohen's kappa over BIO token labels for every annotator pair of a
// sentence, averaged within the sentence, then over sentences. With
// `ignore_all_o` tokens that every annotator labels O are dropped first.
// Sentences with fewer than two annotations (or no remaining tokens) are
// skipped; throws InsufficientOverlapError when nothing is left.
double pairwise_kappa(const CrowdCorpus& corpus, bool ignore_all_o);

enum class AnnotationSource { kCrowd, kGold };

struct StatsReport {
  std::size_t sentences = 0;
  std::size_t annotations = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t annotators = 0;
  double avg_span_length = 0.0;
  double avg_annotators_per_sentence = 0.0;
  double avg_sentences_per_annotator = 0.0;
};

StatsReport corpus_stats(const CrowdCorpus& corpus,
                         AnnotationSource source = AnnotationSource::kCrowd);

}  // namespace crowdtag
