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

#include "anonkit/taxonomy.hpp"

namespace anonkit {

// Adversary self-reported certainty, 1..5.
class CertaintyScore {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 5;
  static constexpr int kDefault = 3;

  constexpr CertaintyScore() = default;
  explicit CertaintyScore(int value);  // throws kScoreOutOfRange
  static CertaintyScore clamped(int value);

  constexpr int value() const { return value_; }
  auto operator<=>(const CertaintyScore&) const = default;

 private:
  int value_ = kDefault;
};

struct AttributeGuess {
  AttributeKind kind = AttributeKind::kAge;
  std::string rationale;
  std::vector<std::string> guesses;  // rank order, 1..3 entries
  CertaintyScore certainty;
  std::optional<std::vector<double>> scores;  // aligned with guesses

  // Highest validation score across ranks; nullopt when unvalidated.
  std::optional<double> best_score() const;
  bool is_correct() const { return best_score().value_or(0.0) > 0.0; }
  bool operator==(const AttributeGuess&) const = default;
};

struct JudgedScore {
  std::string explanation;
  int score = 0;
  bool operator==(const JudgedScore&) const = default;
};

struct UtilityAssessment {
  JudgedScore readability;     // 1..10
  JudgedScore meaning;         // 1..10
  JudgedScore hallucinations;  // 1 = no new information, 0 otherwise

  void check() const;  // throws kScoreOutOfRange
  bool operator==(const UtilityAssessment&) const = default;
};

// (-|P|, -mean certainty); larger is more private. (0, 0) is the maximum.
struct PrivacyScore {
  int neg_count = 0;
  double neg_mean_certainty = 0.0;

  bool operator==(const PrivacyScore&) const = default;
};

struct TrajectoryStep {
  std::size_t step_index = 0;
  std::string text;
  std::vector<AttributeGuess> inferred;  // raw adversary output, validated when truth exists
  UtilityAssessment utility;
  std::vector<AttributeKind> feedback;   // kinds passed on to the anonymizer
  bool stalled = false;

  bool operator==(const TrajectoryStep&) const = default;
};

enum class TrajectoryStatus { kComplete, kAborted };

struct Trajectory {
  std::string text_id;
  std::string profile_id;
  std::vector<TrajectoryStep> steps;
  TrajectoryStatus status = TrajectoryStatus::kComplete;
  std::string error;  // set when aborted

  bool operator==(const Trajectory&) const = default;
};

// Comparison switches shared by scoring consumers.
struct ScoringMode {
  bool correct_only = true;    // count only validated-correct inferences
  bool use_confidence = true;  // break count ties on mean certainty
};

PrivacyScore privacy_score(const TrajectoryStep& step, bool correct_only);
PrivacyScore privacy_score(const std::vector<AttributeGuess>& inferred, bool correct_only);

// Strict lexicographic a > b. With use_confidence off only counts are compared.
bool better_privacy(const PrivacyScore& a, const PrivacyScore& b, bool use_confidence = true);

double utility_score(const UtilityAssessment& u);
int utility_points(const UtilityAssessment& u);  // r + m + 10h, exact

bool dominates(const TrajectoryStep& later, const TrajectoryStep& earlier, ScoringMode mode);
inline bool dominates(const TrajectoryStep& later, const TrajectoryStep& earlier,
                      bool correct_only) {
  return dominates(later, earlier, ScoringMode{correct_only, true});
}

// Relative privacy improvement minus relative utility loss.
double overall_score(double priv_orig, double priv_anon, double util_orig, double util_anon);

// JSON forms; field names follow the distillation samples
// (text/utility/privacy with type/inference/guess/certainty/score).
nlohmann::json to_json(const AttributeGuess& g);
AttributeGuess guess_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UtilityAssessment& u);
UtilityAssessment utility_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrajectoryStep& s);
TrajectoryStep step_from_json(const nlohmann::json& j, std::size_t index);
nlohmann::json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

std::vector<Trajectory> read_trajectories(const std::string& path);
void write_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories);

}  // namespace anonkit
