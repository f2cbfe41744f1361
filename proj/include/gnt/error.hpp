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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gnt {

/// Machine-readable failure categories. The numeric values double as CLI
/// exit codes, so they must stay stable.
enum class ErrorCode : int {
  kInvalidArgument = 2,
  kLengthMismatch = 3,
  kOracleSize = 4,
  kDimensionMismatch = 5,
  kTokenOutOfRange = 6,
  kStaleCache = 7,
  kCheckpointVersion = 8,
  kCheckpointTruncated = 9,
  kCheckpointHeader = 10,
  kMissingReference = 11,
  kDivergence = 12,
  kNonFiniteGradient = 13,
  kDatasetMismatch = 14,
  kIo = 15,
  kParse = 16,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gnt
