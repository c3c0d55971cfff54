// Copyright 2026 The plume Authors
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

#include "plume/error.hpp"

namespace plume {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kNonPositive: return "NonPositive";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kIndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kDoubleBackward: return "DoubleBackward";
    case ErrorCode::kRigMismatch: return "RigMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kNoGroundTruth: return "NoGroundTruth";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kMalformedMatrix: return "MalformedMatrix";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kCheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace plume
