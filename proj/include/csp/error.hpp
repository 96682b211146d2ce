// Copyright 2026 The csp Authors
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

#ifndef CSP_ERROR_HPP_
#define CSP_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace csp {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidId,
  kCycleDetected,
  kDuplicateEdge,
  kInvalidLeaves,
  kIsLeaf,
  kInvalidScores,
  kDagMismatch,
  kInfeasible,
  kTooLarge,
  kMissingTrueLeaf,
  kDomainError,
  kEmptyGrid,
  kEmptyCalibrationSet,
  kInvalidGrid,
  kUnknownGenerator,
  kInvalidDistribution,
  kNotEnumerable,
  kUnknownFormat,
  kParseError,
  kIoError,
};

// Stable token used in CLI diagnostics, e.g. "CycleDetected".
std::string_view ErrorToken(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace csp

#endif  // CSP_ERROR_HPP_
