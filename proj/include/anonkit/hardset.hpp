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

namespace anonkit {

struct HardFilterConfig {
  int max_rounds = 6;
  int address_threshold = 3;   // rewrite inferences at or above this certainty
  int residual_threshold = 2;  // hard when a correct inference stays above this
  std::vector<AttributeKind> kinds{all_kinds().begin(), all_kinds().end()};
  int parallelism = 1;

  void check() const;  // throws kConfigError
};

nlohmann::json to_json(const HardFilterConfig& cfg);
HardFilterConfig hard_filter_config_from_json(const nlohmann::json& j);

struct AttributeProgress {
  AttributeKind kind = AttributeKind::kAge;
  int reference_certainty = 0;
  std::optional<int> succeeded_in_round;  // first round the step succeeded
};

struct HardFilterRecord {
  std::string text_id;
  std::string profile_id;
  std::string text;
  std::string final_text;
  int rounds = 0;
  bool hard = false;
  std::optional<int> round_of_failure;  // set for hard texts
  std::vector<AttributeProgress> progress;
  std::vector<AttributeGuess> residual;  // correct inferences on final_text
};

nlohmann::json to_json(const HardFilterRecord& r);

struct HardFilterResult {
  std::vector<HardFilterRecord> hard;
  std::vector<HardFilterRecord> anonymized_ok;
  std::vector<ItemFailure> failures;
};

// Fixes reference values from the initial inference, then repeatedly asks the
// anonymizer to address ground-truth-matching inferences with certainty at or
// above address_threshold. An attribute's step succeeds when the inferred
// value no longer matches the truth or its certainty is below the reference
// certainty. A text is hard when some correct inference still has certainty
// above residual_threshold once no more rounds remain.
HardFilterRecord filter_hard_one(const CorpusItem& item, const HardFilterConfig& cfg,
                                 const EngineBackends& backends,
                                 const TemplateSet& templates = TemplateSet::builtin());

HardFilterResult filter_hard(const std::vector<CorpusItem>& corpus, const HardFilterConfig& cfg,
                             const EngineBackends& backends,
                             const TemplateSet& templates = TemplateSet::builtin());

struct HardGenText {
  std::string plan;
  std::string text;
  bool operator==(const HardGenText&) const = default;
};

struct HardGenRecord {
  std::string profile_id;
  std::vector<std::string> topics;
  std::vector<HardGenText> texts;
};

nlohmann::json to_json(const HardGenRecord& r);

// Checks a reply object against the structured-output schema and the
// requested count. Each text must contain a first-person word. Throws
// kSchemaViolation.
HardGenRecord parse_hardgen_reply(const nlohmann::json& reply, int count);

HardGenRecord generate_hard(const HardgenPersona& persona, int count, const RoleBackend& backend,
                            const TemplateSet& templates = TemplateSet::builtin());

}  // namespace anonkit
