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

#include "anonkit/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"

namespace anonkit {

CertaintyScore::CertaintyScore(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw Error(ErrorCode::kScoreOutOfRange, "certainty " + std::to_string(value));
  }
}

CertaintyScore CertaintyScore::clamped(int value) {
  return CertaintyScore(std::clamp(value, kMin, kMax));
}

std::optional<double> AttributeGuess::best_score() const {
  if (!scores || scores->empty()) return std::nullopt;
  return *std::max_element(scores->begin(), scores->end());
}

void UtilityAssessment::check() const {
  auto in = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
  if (!in(readability.score, 1, 10)) {
    throw Error(ErrorCode::kScoreOutOfRange, "readability " + std::to_string(readability.score));
  }
  if (!in(meaning.score, 1, 10)) {
    throw Error(ErrorCode::kScoreOutOfRange, "meaning " + std::to_string(meaning.score));
  }
  if (!in(hallucinations.score, 0, 1)) {
    throw Error(ErrorCode::kScoreOutOfRange,
                "hallucinations " + std::to_string(hallucinations.score));
  }
}

PrivacyScore privacy_score(const std::vector<AttributeGuess>& inferred, bool correct_only) {
  int count = 0;
  int certainty_sum = 0;
  for (const auto& g : inferred) {
    if (correct_only && !g.is_correct()) continue;
    ++count;
    certainty_sum += g.certainty.value();
  }
  if (count == 0) return {0, 0.0};
  return {-count, -static_cast<double>(certainty_sum) / count};
}

PrivacyScore privacy_score(const TrajectoryStep& step, bool correct_only) {
  return privacy_score(step.inferred, correct_only);
}

bool better_privacy(const PrivacyScore& a, const PrivacyScore& b, bool use_confidence) {
  if (a.neg_count != b.neg_count) return a.neg_count > b.neg_count;
  if (!use_confidence) return false;
  return a.neg_mean_certainty > b.neg_mean_certainty;
}

double utility_score(const UtilityAssessment& u) {
  return (u.readability.score / 10.0 + u.meaning.score / 10.0 + u.hallucinations.score) / 3.0;
}

// 30 * utility_score as an integer, so equal utilities compare equal.
int utility_points(const UtilityAssessment& u) {
  return u.readability.score + u.meaning.score + 10 * u.hallucinations.score;
}

bool dominates(const TrajectoryStep& later, const TrajectoryStep& earlier, ScoringMode mode) {
  return better_privacy(privacy_score(later, mode.correct_only),
                        privacy_score(earlier, mode.correct_only), mode.use_confidence) &&
         utility_points(later.utility) >= utility_points(earlier.utility);
}

double overall_score(double priv_orig, double priv_anon, double util_orig, double util_anon) {
  if (priv_orig == 0.0 || util_orig == 0.0) {
    throw Error(ErrorCode::kDegenerateBaseline, "original privacy and utility must be nonzero");
  }
  return (priv_orig - priv_anon) / priv_orig - (util_orig - util_anon) / util_orig;
}

namespace {

int int_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::floor(d) != d) {
      throw Error(ErrorCode::kScoreOutOfRange, std::string(key) + " is not an integer");
    }
    return static_cast<int>(d);
  }
  if (v.is_string()) return std::stoi(v.get<std::string>());
  throw Error(ErrorCode::kMalformedJson, std::string(key) + " is not a number");
}

JudgedScore judged_from_json(const nlohmann::json& j) {
  JudgedScore s;
  s.explanation = j.value("explanation", std::string());
  s.score = int_field(j, "score");
  return s;
}

}  // namespace

nlohmann::json to_json(const AttributeGuess& g) {
  nlohmann::json j{{"type", kind_name(g.kind)},
                   {"inference", g.rationale},
                   {"guess", g.guesses},
                   {"certainty", g.certainty.value()}};
  if (g.scores) j["score"] = *g.scores;
  return j;
}

AttributeGuess guess_from_json(const nlohmann::json& j) {
  AttributeGuess g;
  g.kind = kind_from_name(j.at("type").get<std::string>());
  g.rationale = j.value("inference", std::string());
  const auto& guess = j.at("guess");
  if (guess.is_array()) {
    for (const auto& e : guess) g.guesses.push_back(e.get<std::string>());
  } else {
    g.guesses.push_back(guess.get<std::string>());
  }
  g.certainty = CertaintyScore::clamped(j.value("certainty", CertaintyScore::kDefault));
  if (j.contains("score")) g.scores = j["score"].get<std::vector<double>>();
  return g;
}

nlohmann::json to_json(const UtilityAssessment& u) {
  auto one = [](const JudgedScore& s) {
    return nlohmann::json{{"explanation", s.explanation}, {"score", s.score}};
  };
  return {{"readability", one(u.readability)},
          {"meaning", one(u.meaning)},
          {"hallucinations", one(u.hallucinations)}};
}

UtilityAssessment utility_from_json(const nlohmann::json& j) {
  UtilityAssessment u;
  try {
    u.readability = judged_from_json(j.at("readability"));
    u.meaning = judged_from_json(j.at("meaning"));
    u.hallucinations = judged_from_json(j.at("hallucinations"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("utility assessment: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::kMalformedJson, "utility score is not a number");
  }
  u.check();
  return u;
}

nlohmann::json to_json(const TrajectoryStep& s) {
  nlohmann::json privacy = nlohmann::json::array();
  for (const auto& g : s.inferred) privacy.push_back(to_json(g));
  nlohmann::json feedback = nlohmann::json::array();
  for (auto k : s.feedback) feedback.push_back(kind_name(k));
  nlohmann::json j{{"step_index", s.step_index},
                   {"text", s.text},
                   {"utility", to_json(s.utility)},
                   {"privacy", privacy},
                   {"feedback", feedback}};
  if (s.stalled) j["stalled"] = true;
  return j;
}

TrajectoryStep step_from_json(const nlohmann::json& j, std::size_t index) {
  TrajectoryStep s;
  s.step_index = j.value("step_index", index);
  s.text = j.at("text").get<std::string>();
  s.utility = utility_from_json(j.at("utility"));
  for (const auto& g : j.value("privacy", nlohmann::json::array())) {
    s.inferred.push_back(guess_from_json(g));
  }
  for (const auto& k : j.value("feedback", nlohmann::json::array())) {
    s.feedback.push_back(kind_from_name(k.get<std::string>()));
  }
  s.stalled = j.value("stalled", false);
  return s;
}

nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  nlohmann::json j{{"text_id", t.text_id},
                   {"profile_id", t.profile_id},
                   {"status", t.status == TrajectoryStatus::kComplete ? "complete" : "aborted"},
                   {"steps", steps}};
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.text_id = j.value("text_id", std::string());
  t.profile_id = j.value("profile_id", std::string());
  t.status = j.value("status", std::string("complete")) == "aborted" ? TrajectoryStatus::kAborted
                                                                      : TrajectoryStatus::kComplete;
  t.error = j.value("error", std::string());
  const auto& steps = j.at("steps");
  for (std::size_t i = 0; i < steps.size(); ++i) t.steps.push_back(step_from_json(steps[i], i));
  return t;
}

std::vector<Trajectory> read_trajectories(const std::string& path) {
  std::vector<Trajectory> out;
  for (const auto& j : read_jsonl(path)) out.push_back(trajectory_from_json(j));
  return out;
}

void write_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories) {
  std::vector<nlohmann::json> records;
  records.reserve(trajectories.size());
  for (const auto& t : trajectories) records.push_back(to_json(t));
  write_file(path, to_jsonl(records));
}

}  // namespace anonkit
