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

#include "crowdtag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "crowdtag/error.hpp"
#include "json.hpp"

namespace crowdtag {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

AnnotatorRegistry::AnnotatorRegistry(std::vector<std::string> ids) {
  for (const auto& id : ids) {
    if (contains(id)) throw ValidationError("duplicate annotator id '" + id + "' in registry");
    add(id);
  }
}

std::size_t AnnotatorRegistry::add(const std::string& id) {
  auto it = index_.find(id);
  if (it != index_.end()) return it->second;
  ids_.push_back(id);
  index_.emplace(id, ids_.size() - 1);
  return ids_.size() - 1;
}

std::size_t AnnotatorRegistry::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it != index_.end()) return it->second;
  std::string known;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (i) known += ", ";
    known += ids_[i];
  }
  throw UnknownAnnotatorError("unknown annotator '" + id + "'; valid ids: [" +
                              known + "]");
}

bool CrowdCorpus::has_gold() const {
  return !entries.empty() &&
         std::all_of(entries.begin(), entries.end(),
                     [](const CorpusEntry& e) { return e.gold.has_value(); });
}

std::optional<std::size_t> CrowdCorpus::find(const std::string& sentence_id) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].sentence.id == sentence_id) return i;
  }
  return std::nullopt;
}

void validate(const CrowdCorpus& corpus) {
  std::set<std::string> seen;
  for (const auto& e : corpus.entries) {
    const auto& sid = e.sentence.id;
    if (sid.empty()) throw ValidationError("sentence with empty id");
    if (!seen.insert(sid).second) throw ValidationError("duplicate sentence id '" + sid + "'");
    if (e.sentence.tokens.empty()) throw ValidationError("sentence '" + sid + "' has no tokens");
    std::set<std::string> annotators;
    for (const auto& a : e.annotations) {
      if (!corpus.registry.contains(a.annotator)) {
        throw ValidationError("sentence '" + sid + "': annotator '" + a.annotator +
                              "' is not registered");
      }
      if (!annotators.insert(a.annotator).second) {
        throw ValidationError("sentence '" + sid + "': annotator '" + a.annotator +
                              "' annotates it twice");
      }
      validate_spans(a.spans, e.sentence.size(),
                     "sentence '" + sid + "', annotator '" + a.annotator + "'");
    }
    if (e.gold) validate_spans(*e.gold, e.sentence.size(), "sentence '" + sid + "', gold");
  }
}

namespace {

void sort_spans(std::vector<Span>& spans) {
  std::stable_sort(spans.begin(), spans.end(),
                   [](const Span& a, const Span& b) { return a.start < b.start; });
}

std::vector<Span> parse_spans(const json& arr, std::size_t line) {
  if (!arr.is_array()) throw FormatError("'spans' must be an array", line);
  std::vector<Span> spans;
  for (const auto& s : arr) {
    try {
      const auto start = s.at("start").get<long long>();
      const auto end = s.at("end").get<long long>();
      if (start < 0 || end < 0) throw FormatError("negative span offset", line);
      spans.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                       parse_polarity(s.at("polarity").get<std::string>())});
    } catch (const FormatError& e) {
      if (e.line()) throw;
      throw FormatError(e.what(), line);
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad span: ") + e.what(), line);
    }
  }
  return spans;
}

ordered_json spans_json(const std::vector<Span>& spans) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : spans) {
    ordered_json o;
    o["start"] = s.start;
    o["end"] = s.end;
    o["polarity"] = std::string(polarity_name(s.polarity));
    arr.push_back(std::move(o));
  }
  return arr;
}

}  // namespace

void canonicalize(CrowdCorpus& corpus) {
  for (auto& e : corpus.entries) {
    for (auto& a : e.annotations) sort_spans(a.spans);
    if (e.gold) sort_spans(*e.gold);
    std::stable_sort(e.annotations.begin(), e.annotations.end(),
                     [&](const Annotation& a, const Annotation& b) {
                       return corpus.registry.index_of(a.annotator) <
                              corpus.registry.index_of(b.annotator);
                     });
  }
}

CrowdCorpus read_corpus_jsonl(std::istream& in, AnnotatorRegistry registry) {
  const bool fill_registry = registry.empty();
  CrowdCorpus corpus;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!j.is_object()) throw FormatError("expected a JSON object", line);
    CorpusEntry entry;
    try {
      entry.sentence.id = j.at("id").get<std::string>();
      entry.sentence.tokens = j.at("text").get<std::vector<std::string>>();
      if (j.contains("annotations")) {
        for (const auto& a : j.at("annotations")) {
          Annotation ann;
          ann.annotator = a.at("annotator").get<std::string>();
          ann.spans = parse_spans(a.at("spans"), line);
          if (fill_registry) {
            registry.add(ann.annotator);
          } else if (!registry.contains(ann.annotator)) {
            throw ValidationError("line " + std::to_string(line) + ": sentence '" +
                                  entry.sentence.id + "': annotator '" +
                                  ann.annotator + "' is not in the registry");
          }
          entry.annotations.push_back(std::move(ann));
        }
      }
      if (j.contains("gold") && !j.at("gold").is_null()) {
        entry.gold = parse_spans(j.at("gold").at("spans"), line);
      }
    } catch (const json::exception& e) {
      throw FormatError(std::string("schema mismatch: ") + e.what(), line);
    }
    corpus.entries.push_back(std::move(entry));
  }
  corpus.registry = std::move(registry);
  return corpus;
}

void write_corpus_jsonl(const CrowdCorpus& corpus, std::ostream& out) {
  for (const auto& e : corpus.entries) {
    ordered_json j;
    j["id"] = e.sentence.id;
    j["text"] = e.sentence.tokens;
    ordered_json anns = ordered_json::array();
    for (const auto& a : e.annotations) {
      ordered_json o;
      o["annotator"] = a.annotator;
      o["spans"] = spans_json(a.spans);
      anns.push_back(std::move(o));
    }
    j["annotations"] = std::move(anns);
    if (e.gold) {
      ordered_json g;
      g["spans"] = spans_json(*e.gold);
      j["gold"] = std::move(g);
    }
    out << j.dump() << '\n';
  }
}

AnnotatorRegistry read_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open registry " + path.string());
  try {
    const json j = json::parse(in);
    return AnnotatorRegistry(j.get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": expected a JSON array of annotator ids (" +
                      e.what() + ")");
  }
}

void write_registry(const AnnotatorRegistry& registry,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << json(registry.ids()).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

CrowdCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  AnnotatorRegistry registry;
  const auto sidecar = path.parent_path() / kRegistryFile;
  if (std::filesystem::exists(sidecar)) registry = read_registry(sidecar);
  CrowdCorpus corpus = read_corpus_jsonl(in, std::move(registry));
  validate(corpus);
  canonicalize(corpus);
  return corpus;
}

void save_corpus(const CrowdCorpus& corpus, const std::filesystem::path& path) {
  validate(corpus);
  CrowdCorpus canonical = corpus;
  canonicalize(canonical);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus_jsonl(canonical, out);
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
  write_registry(canonical.registry, path.parent_path() / kRegistryFile);
}

CrowdCorpus load_split(const std::filesystem::path& dir, const std::string& split) {
  return load_corpus(dir / (split + ".jsonl"));
}

}  // namespace crowdtag
