// Copyright 2026 The AANT Authors.
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

#ifndef AANT_ERROR_HPP_
#define AANT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace aant {

/// Bad input: malformed arguments, schema violations, shape mismatches.
/// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Feature-file / checkpoint decoding failures.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Failures of the environment (I/O, non-finite training state). Exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

inline void require_shape(bool condition, const std::string& message) {
  if (!condition) throw ShapeError(message);
}

}  // namespace aant

#endif  // AANT_ERROR_HPP_
