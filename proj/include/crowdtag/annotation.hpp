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
#include <string>
#include <string_view>
#include <vector>

namespace crowdtag {

enum class Polarity { kPos, kNeg };

std::string_view polarity_name(Polarity p);
// Parses "POS" / "NEG"; throws FormatError otherwise.
Polarity parse_polarity(std::string_view s);
inline Polarity opposite(Polarity p) {
  return p == Polarity::kPos ? Polarity::kNeg : Polarity::kPos;
}

// Half-open token interval [start, end) carrying a polarity.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  Polarity polarity = Polarity::kPos;

  std::size_t length() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Token overlap of two spans regardless of polarity.
std::size_t overlap(const Span& a, const Span& b);

// One annotator's answer for one sentence. An empty span list means the
// annotator found no opinion expression.
struct Annotation {
  std::string annotator;
  std::vector<Span> spans;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Throws ValidationError unless spans are non-empty, within [0, length),
// sorted by start and pairwise non-overlapping. `context` prefixes the message.
void validate_spans(const std::vector<Span>& spans, std::size_t length,
                    const std::string& context);

}  // namespace crowdtag
