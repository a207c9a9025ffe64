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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "crowdtag/model.hpp"

namespace crowdtag {

inline constexpr const char* kCheckpointFormat = "crowdtag-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string mode;  // training mode name, e.g. "ADAPTER"
  TaggerModel model;
};

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
// Hash of the registry ids in index order, newline separated.
std::string registry_hash(const AnnotatorRegistry& registry);

// JSON container: format tag, version, config, mode, registry with its hash,
// vocabulary and every parameter tensor by name.
void write_checkpoint(std::ostream& out, const TaggerModel& model, const std::string& mode);
void save_checkpoint(const std::filesystem::path& path, const TaggerModel& model,
                     const std::string& mode);

// Throws FormatError on a malformed container, a registry hash mismatch, or a
// parameter table whose names or shapes disagree with the stored config.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crowdtag
