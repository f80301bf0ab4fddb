// Copyright 2026 The Sentry Authors. All rights reserved.
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

namespace sentry {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (sizes, ranges, counts).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Input points lie outside the region where the lens model is invertible.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Too few or geometrically degenerate correspondences.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A closed-form or linear estimate could not be formed from the data.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Iterative refinement produced non-finite values.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// A servo command carried a non-finite angle.
class InvalidCommandError : public Error {
 public:
  using Error::Error;
};

/// Malformed wire or file input; `offset` is the byte where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Malformed client request body.
class RequestError : public Error {
 public:
  using Error::Error;
};

/// Bad run configuration. field() names the offending key or path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace sentry
