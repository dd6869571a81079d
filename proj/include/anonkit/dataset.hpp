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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/protocol.hpp"
#include "anonkit/scoring.hpp"

namespace anonkit {

struct AnonPairRecord {
  std::string trajectory_id;
  std::size_t i = 0;
  std::size_t j = 0;
  std::string input_text;
  std::string target_text;
  std::vector<AttributeGuess> feedback;      // addressed inferences at step i
  std::optional<UtilityAssessment> utility;  // U_i when utility feedback is exported

  bool operator==(const AnonPairRecord&) const = default;
};

struct InferenceRecord {
  std::string trajectory_id;
  std::size_t step = 0;
  std::string text;
  std::vector<AttributeGuess> target;

  bool operator==(const InferenceRecord&) const = default;
};

struct UtilityRecord {
  std::string trajectory_id;
  std::size_t step = 0;
  std::string original;
  std::string adapted;
  UtilityAssessment target;

  bool operator==(const UtilityRecord&) const = default;
};

struct PreferenceTriple {
  std::string trajectory_id;
  std::size_t i = 0;
  std::size_t w = 0;
  std::size_t l = 0;
  std::string prompt_text;
  std::string chosen;
  std::string rejected;
  std::vector<AttributeGuess> feedback;  // addressed inferences at step i

  bool operator==(const PreferenceTriple&) const = default;
};

struct DatasetConfig {
  ScoringMode mode;
  bool adv_feedback = true;       // inference blocks in anonymization prompts
  bool utility_feedback = false;  // utility block in anonymization prompts
  bool include_empty_priv = true;
  std::optional<std::size_t> pref_cap_per_trajectory;
  bool dedup = true;  // collapse identical content across trajectories

  void check() const;
};

nlohmann::json to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

// Every (i, j) with i < j where step j dominates step i, ordered by (i, j).
std::vector<AnonPairRecord> build_anon_pairs(const Trajectory& t, const DatasetConfig& cfg);
std::vector<InferenceRecord> build_priv_dataset(const Trajectory& t, const DatasetConfig& cfg);
std::vector<UtilityRecord> build_util_dataset(const Trajectory& t);
// For every prompt i, every unordered {w, l} with w, l > i where one step
// dominates the other; the dominant one is chosen. Ordered by (i, min, max);
// the per-trajectory cap keeps the first triples in that order.
std::vector<PreferenceTriple> build_pref_triples(const Trajectory& t, const DatasetConfig& cfg);

struct Datasets {
  std::vector<AnonPairRecord> anon;
  std::vector<InferenceRecord> priv;
  std::vector<UtilityRecord> util;
  std::vector<PreferenceTriple> pref;
};

Datasets build_datasets(const std::vector<Trajectory>& trajectories, const DatasetConfig& cfg);

enum class TaskKind { kAnon, kPriv, kUtil, kPref };
std::string_view task_name(TaskKind task);

// Trainer-facing line formats. anon/priv/util lines are
// {"messages": [system, user, assistant], "metadata": {...}}; pref lines are
// {"prompt": [system, user], "chosen": [assistant], "rejected": [assistant],
// "metadata": {...}}.
nlohmann::json export_record(const AnonPairRecord& r,
                             const TemplateSet& templates = TemplateSet::builtin());
nlohmann::json export_record(const InferenceRecord& r,
                             const TemplateSet& templates = TemplateSet::builtin());
nlohmann::json export_record(const UtilityRecord& r,
                             const TemplateSet& templates = TemplateSet::builtin());
nlohmann::json export_record(const PreferenceTriple& r,
                             const TemplateSet& templates = TemplateSet::builtin());

AnonPairRecord import_anon(const nlohmann::json& line,
                           const TemplateSet& templates = TemplateSet::builtin());
InferenceRecord import_priv(const nlohmann::json& line,
                            const TemplateSet& templates = TemplateSet::builtin());
UtilityRecord import_util(const nlohmann::json& line,
                          const TemplateSet& templates = TemplateSet::builtin());
PreferenceTriple import_pref(const nlohmann::json& line,
                             const TemplateSet& templates = TemplateSet::builtin());

// Writes `<dir>/<task>.jsonl` for all four tasks and returns the manifest
// {tasks: {name: {path, count, sha256}}, config}.
nlohmann::json export_datasets(const Datasets& data, const DatasetConfig& cfg,
                               const std::filesystem::path& dir,
                               const TemplateSet& templates = TemplateSet::builtin());

}  // namespace anonkit
