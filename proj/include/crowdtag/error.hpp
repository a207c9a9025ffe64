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
#include <stdexcept>
#include <string>

namespace crowdtag {

// Base of every error the library throws. The CLI maps each subclass to its
// own exit code, see ExitCode in cli.hpp.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes. Both shapes are kept in printable form.
class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, const std::string& lhs,
             const std::string& rhs)
      : Error(op + ": incompatible shapes " + lhs + " and " + rhs),
        lhs_(lhs),
        rhs_(rhs) {}
  explicit ShapeError(const std::string& what) : Error(what) {}

  const std::string& lhs() const { return lhs_; }
  const std::string& rhs() const { return rhs_; }

 private:
  std::string lhs_;
  std::string rhs_;
};

// Malformed input file. line() is 1-based, 0 when not line oriented.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed data that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Agreement statistics requested on data with no sentence carrying two or
// more annotations.
class InsufficientOverlapError : public Error {
 public:
  using Error::Error;
};

class UnknownAnnotatorError : public Error {
 public:
  using Error::Error;
};

// Bad configuration values or a training mode the corpus cannot support.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace crowdtag
