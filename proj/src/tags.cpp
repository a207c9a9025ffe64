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

#include "crowdtag/tags.hpp"

#include <algorithm>

#include "crowdtag/error.hpp"

namespace crowdtag {

std::string_view polarity_name(Polarity p) {
  return p == Polarity::kPos ? "POS" : "NEG";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "POS") return Polarity::kPos;
  if (s == "NEG") return Polarity::kNeg;
  throw FormatError("unknown polarity '" + std::string(s) + "'");
}

std::size_t overlap(const Span& a, const Span& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

void validate_spans(const std::vector<Span>& spans, std::size_t length,
                    const std::string& context) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const Span& s = spans[i];
    if (s.start >= s.end || s.end > length) {
      throw ValidationError(context + ": span [" + std::to_string(s.start) +
                            "," + std::to_string(s.end) +
                            ") does not fit a sentence of length " +
                            std::to_string(length));
    }
    if (i > 0 && s.start < prev_end) {
      throw ValidationError(context + ": span [" + std::to_string(s.start) +
                            "," + std::to_string(s.end) +
                            ") overlaps or precedes the previous span");
    }
    prev_end = s.end;
  }
}

Tag tag_from_index(std::size_t i) {
  if (i >= kTagCount) throw Error("tag index out of range: " + std::to_string(i));
  return static_cast<Tag>(i);
}

std::string_view tag_name(Tag t) { return kTagNames[tag_index(t)]; }

std::optional<Tag> parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kTagCount; ++i) {
    if (kTagNames[i] == name) return static_cast<Tag>(i);
  }
  return std::nullopt;
}

Tag begin_tag(Polarity p) { return p == Polarity::kPos ? Tag::kBPos : Tag::kBNeg; }
Tag inside_tag(Polarity p) { return p == Polarity::kPos ? Tag::kIPos : Tag::kINeg; }
bool is_outside(Tag t) { return t == Tag::kO; }
bool is_begin(Tag t) { return t == Tag::kBPos || t == Tag::kBNeg; }

Polarity tag_polarity(Tag t) {
  switch (t) {
    case Tag::kBPos:
    case Tag::kIPos: return Polarity::kPos;
    case Tag::kBNeg:
    case Tag::kINeg: return Polarity::kNeg;
    default: throw Error("O tag has no polarity");
  }
}

std::vector<Tag> encode_tags(const std::vector<Span>& spans, std::size_t n) {
  validate_spans(spans, n, "encode_tags");
  std::vector<Tag> tags(n, Tag::kO);
  for (const Span& s : spans) {
    tags[s.start] = begin_tag(s.polarity);
    for (std::size_t i = s.start + 1; i < s.end; ++i) tags[i] = inside_tag(s.polarity);
  }
  return tags;
}

std::vector<Span> decode_tags(std::span<const Tag> tags) {
  std::vector<Span> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag t = tags[i];
    if (is_outside(t)) {
      open = false;
      continue;
    }
    const Polarity p = tag_polarity(t);
    if (is_begin(t) || !open || spans.back().polarity != p) {
      spans.push_back({i, i + 1, p});
      open = true;
    } else {
      spans.back().end = i + 1;
    }
  }
  return spans;
}

}  // namespace crowdtag
