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

#include "csp/error.hpp"

namespace csp {

std::string_view ErrorToken(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidId: return "InvalidId";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kInvalidLeaves: return "InvalidLeaves";
    case ErrorCode::kIsLeaf: return "IsLeaf";
    case ErrorCode::kInvalidScores: return "InvalidScores";
    case ErrorCode::kDagMismatch: return "DagMismatch";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kMissingTrueLeaf: return "MissingTrueLeaf";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kEmptyCalibrationSet: return "EmptyCalibrationSet";
    case ErrorCode::kInvalidGrid: return "InvalidGrid";
    case ErrorCode::kUnknownGenerator: return "UnknownGenerator";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kNotEnumerable: return "NotEnumerable";
    case ErrorCode::kUnknownFormat: return "UnknownFormat";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace csp
