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

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/engine.hpp"
#include "anonkit/error.hpp"

namespace anonkit {

enum class StopReason { kClean, kMaxIters, kUtilityFloor, kStalled };

std::string_view stop_reason_name(StopReason r);

struct RefinePolicy {
  int max_iters = 5;
  int certainty_stop_threshold = 3;
  double min_utility = 0.0;
  std::vector<AttributeKind> kinds{all_kinds().begin(), all_kinds().end()};
  bool utility_feedback = true;  // embed U_t in the rewrite prompt

  void check() const;  // throws kInvalidArgument
};

nlohmann::json to_json(const RefinePolicy& p);
RefinePolicy refine_policy_from_json(const nlohmann::json& j);

struct RefineIteration {
  std::string text;
  std::vector<AttributeGuess> inferred;
  UtilityAssessment utility;
  std::optional<StopReason> stop_reason;  // set on the last iteration
};

struct RefineReport {
  std::vector<RefineIteration> iterations;
  std::string final_text;
  std::optional<StopReason> stop_reason;
  // Rewrite discarded by the utility floor, with the judge's assessment.
  std::optional<RefineIteration> rejected_candidate;
};

nlohmann::json to_json(const RefineReport& r);

// Carries the iterations completed before the failure.
class RefineError : public Error {
 public:
  RefineError(const Error& cause, RefineReport partial)
      : Error(cause.code(), std::string("self-refinement stopped: ") + cause.what()),
        partial_(std::move(partial)) {}
  const RefineReport& partial() const { return partial_; }

 private:
  RefineReport partial_;
};

// One model plays every role, with utility always judged against x0. The
// loop ends once no inference reaches the certainty threshold or the rewrite
// budget runs out. A rewrite judged below the utility floor also ends it, as
// do two consecutive rewrites that return their input unchanged.
RefineReport self_refine(const std::string& x0, const RefinePolicy& policy, const RoleBackend& model,
                         const TemplateSet& templates = TemplateSet::builtin());

}  // namespace anonkit
