// Copyright 2026 The stgloc Authors.
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

#ifndef STGLOC_ERRORS_HPP_
#define STGLOC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace stg {

// Error families map onto CLI exit codes: usage (1), data (2), numerical (3).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller-supplied input (empty query, image too small, inverted span).
class InputError : public DataError {
 public:
  using DataError::DataError;
};

class LoadError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Violated call contract (non-scalar loss, mismatched distribution lengths).
class ContractError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// NaN or divergence during optimization.
class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace stg

#endif  // STGLOC_ERRORS_HPP_
