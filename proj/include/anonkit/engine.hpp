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

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/backend.hpp"
#include "anonkit/scoring.hpp"
#include "anonkit/taxonomy.hpp"

namespace anonkit {

// A backend together with the generation parameters used for one role.
struct RoleBackend {
  std::shared_ptr<ChatBackend> backend;
  GenerationParams params;

  std::string complete(std::span<const ChatTurn> turns) const;
};

struct EngineBackends {
  RoleBackend anonymizer;
  RoleBackend adversary;
  RoleBackend utility;
  RoleBackend judge;  // semantic validation of occupation, location, place of birth
};

struct EngineConfig {
  int max_steps = 3;
  bool correct_only_feedback = true;
  int certainty_floor = 1;
  std::vector<AttributeKind> kinds{all_kinds().begin(), all_kinds().end()};
  int parallelism = 1;
  bool request_certainty = true;

  void check() const;  // throws kConfigError
};

nlohmann::json to_json(const EngineConfig& cfg);
EngineConfig engine_config_from_json(const nlohmann::json& j);

// Validates each guess of `inferred` against `truth` in place. Guesses for
// unlabeled kinds keep scores unset.
void validate_inferences(std::vector<AttributeGuess>& inferred, const GroundTruthProfile& truth,
                         const RoleBackend& judge, const TemplateSet& templates);

// Adversary inference over `kinds` on `text`.
std::vector<AttributeGuess> infer_attributes(std::string_view text,
                                             std::span<const AttributeKind> kinds,
                                             const RoleBackend& adversary, bool request_certainty,
                                             const TemplateSet& templates);

UtilityAssessment judge_utility(std::string_view original, std::string_view adapted,
                                const RoleBackend& judge, const TemplateSet& templates);

// Alternates inference and rewriting until no feedback remains or max_steps
// rewrites have been made, judging utility at every step. A FormatViolation returns the partial trajectory marked
// aborted; other errors are rethrown with the failing step in the message.
Trajectory run_trajectory(const CorpusItem& item, const EngineConfig& cfg,
                          const EngineBackends& backends,
                          const TemplateSet& templates = TemplateSet::builtin());

struct ItemFailure {
  std::size_t index = 0;
  std::string text_id;
  std::string code;
  std::string message;
};

nlohmann::json to_json(const ItemFailure& f);

// Completed trajectories keyed by text_id, persisted as JSONL so reruns skip
// finished items.
class ProgressStore {
 public:
  explicit ProgressStore(std::filesystem::path path);

  std::optional<Trajectory> find(const std::string& text_id) const;
  void record(const Trajectory& t);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, Trajectory> done_;
};

struct CorpusRun {
  std::vector<Trajectory> trajectories;  // corpus order, failures omitted
  std::vector<ItemFailure> failures;
  std::size_t resumed = 0;  // items served from the progress store
};

CorpusRun run_corpus(const std::vector<CorpusItem>& corpus, const EngineConfig& cfg,
                     const EngineBackends& backends, ProgressStore* progress = nullptr,
                     const TemplateSet& templates = TemplateSet::builtin());

// Everything needed to tell two runs apart, template digests included.
nlohmann::json run_manifest(const EngineConfig& cfg, const EngineBackends& backends,
                            const TemplateSet& templates);

}  // namespace anonkit
