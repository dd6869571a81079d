// Copyright 2026 The anonkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "anonkit/error.hpp"

namespace anonkit {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnmappableValue: return "UnmappableValue";
    case ErrorCode::kJudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::kMalformedGuess: return "MalformedGuess";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kDegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::kEmptyFeedback: return "EmptyFeedback";
    case ErrorCode::kFormatViolation: return "FormatViolation";
    case ErrorCode::kMalformedJson: return "MalformedJson";
    case ErrorCode::kMissingKind: return "MissingKind";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCorpusMismatch: return "CorpusMismatch";
    case ErrorCode::kUnknownBase: return "UnknownBase";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kUnknownRun: return "UnknownRun";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace anonkit
