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

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdtag {

// Process exit codes, one per error class.
enum class ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kFormat = 5,
  kValidation = 6,
  kUnknownAnnotator = 7,
  kInsufficientData = 8,
};

// Maps the exception currently being handled to its exit code. Call from a
// catch block only.
ExitCode exit_code_for_current_exception();

// Entry point of the crowdtag tool: subcommands simulate, train, eval,
// aggregate and stats. `args` excludes the program name. Reports go to `out`,
// logs and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdtag
