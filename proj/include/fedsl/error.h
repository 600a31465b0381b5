// Copyright 2026 The FedSL-Sim Authors
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

#ifndef FEDSL_ERROR_H_
#define FEDSL_ERROR_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace fedsl {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or argument violation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor shape does not match what a layer or kernel expects.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A resource constraint cannot be met (zero-rate link, missed deadline).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Broken internal contract, e.g. a cache that does not belong to the spec.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Event scheduled in the past, or a handler failure with event context.
class SchedulingError : public Error {
 public:
  using Error::Error;
};

// Configuration problem. `pointer()` is the JSON pointer of the offending
// value, or empty for syntax errors.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, std::string message, std::string source = "")
      : Error(compose(source, pointer, message)),
        pointer_(std::move(pointer)),
        message_(std::move(message)),
        source_(std::move(source)) {}

  const std::string& pointer() const { return pointer_; }
  const std::string& message() const { return message_; }
  const std::string& source() const { return source_; }

 private:
  static std::string compose(const std::string& source, const std::string& pointer,
                             const std::string& message) {
    std::string out = source.empty() ? "" : source + ": ";
    if (!pointer.empty()) out += pointer + ": ";
    return out + message;
  }

  std::string pointer_;
  std::string message_;
  std::string source_;
};

}  // namespace fedsl

#endif  // FEDSL_ERROR_H_
