// Copyright 2026 The Chiralis Authors
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

#include <stdexcept>
#include <string>

namespace chiralis {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument value (k >= |V|, non-positive radius, empty lists, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally readable data that violates an invariant (index range, lengths).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures and binary container corruption.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered during forward/backward evaluation or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace chiralis
