// Copyright 2026  The gnt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gnt/error.hpp"

namespace gnt {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kOracleSize: return "oracle_size";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kTokenOutOfRange: return "token_out_of_range";
    case ErrorCode::kStaleCache: return "stale_cache";
    case ErrorCode::kCheckpointVersion: return "checkpoint_version";
    case ErrorCode::kCheckpointTruncated: return "checkpoint_truncated";
    case ErrorCode::kCheckpointHeader: return "checkpoint_header";
    case ErrorCode::kMissingReference: return "missing_reference";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNonFiniteGradient: return "non_finite_gradient";
    case ErrorCode::kDatasetMismatch: return "dataset_mismatch";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace gnt
