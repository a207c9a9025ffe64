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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "crowdtag/annotation.hpp"

namespace crowdtag {

// BIO tags over the two polarities. The numeric values are the dense label
// indices used by the model and must not be reordered.
enum class Tag : int { kO = 0, kBPos = 1, kIPos = 2, kBNeg = 3, kINeg = 4 };

inline constexpr std::size_t kTagCount = 5;
inline constexpr std::array<std::string_view, kTagCount> kTagNames = {
    "O", "B-POS", "I-POS", "B-NEG", "I-NEG"};

inline std::size_t tag_index(Tag t) { return static_cast<std::size_t>(t); }
Tag tag_from_index(std::size_t i);
std::string_view tag_name(Tag t);
std::optional<Tag> parse_tag(std::string_view name);

Tag begin_tag(Polarity p);
Tag inside_tag(Polarity p);
bool is_outside(Tag t);
bool is_begin(Tag t);
// Polarity of a non-O tag.
Polarity tag_polarity(Tag t);

// Span list to tags of a length-n sentence. Throws ValidationError when the
// spans overlap or do not fit.
std::vector<Tag> encode_tags(const std::vector<Span>& spans, std::size_t n);

// Tags to spans. Total: an I-X that does not continue an X span (position 0,
// after O, after the other polarity) opens a new span as if it were B-X.
std::vector<Span> decode_tags(std::span<const Tag> tags);

}  // namespace crowdtag
