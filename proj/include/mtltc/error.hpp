// Copyright 2026 The mtltc Authors.
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

namespace mtltc {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorCategory : int {
  kUsage = 2,
  kDataFormat = 3,
  kShape = 4,
  kNumerical = 5,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kDataFormat: return "data-format";
    case ErrorCategory::kShape: return "shape-config";
    case ErrorCategory::kNumerical: return "numerical";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorCategory::kUsage, w) {}
};
struct DataFormatError : Error {
  explicit DataFormatError(const std::string& w) : Error(ErrorCategory::kDataFormat, w) {}
};
/// Shape or configuration mismatch (tensor sizes, architecture rules).
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorCategory::kShape, w) {}
};
/// Configuration problems that are not tensor shapes, e.g. a missing input file.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCategory::kShape, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorCategory::kNumerical, w) {}
};

}  // namespace mtltc
