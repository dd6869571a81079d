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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anonkit {

enum class ErrorCode {
  kUnmappableValue,
  kJudgeUnavailable,
  kMalformedGuess,
  kCountMismatch,
  kUnknownToken,
  kDegenerateBaseline,
  kEmptyFeedback,
  kFormatViolation,
  kMalformedJson,
  kMissingKind,
  kScoreOutOfRange,
  kTransportError,
  kAuthError,
  kRateLimited,
  kProviderError,
  kIoError,
  kCorpusMismatch,
  kUnknownBase,
  kSchemaViolation,
  kUnknownRun,
  kInvalidArgument,
  kConfigError,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Provider answered with a non-success HTTP status.
class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body_excerpt)
      : Error(ErrorCode::kProviderError,
              "status " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

}  // namespace anonkit
