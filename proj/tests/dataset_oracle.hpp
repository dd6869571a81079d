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

// Reference construction of the anonymization pairs and preference triples
// from first principles, with integer arithmetic only. Shares no code with
// the library's scoring.

#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "anonkit/scoring.hpp"

namespace anonkit::testing {

struct OracleStep {
  int count = 0;           // inferences counted towards privacy
  int certainty_sum = 0;   // over counted inferences
  int utility_points = 0;  // readability + meaning + 10 * hallucination
};

inline OracleStep oracle_step(const TrajectoryStep& s, bool correct_only) {
  OracleStep o;
  for (const auto& g : s.inferred) {
    bool correct = false;
    if (g.scores) {
      for (double v : *g.scores) correct = correct || v > 0.0;
    }
    if (correct_only && !correct) continue;
    ++o.count;
    o.certainty_sum += g.certainty.value();
  }
  o.utility_points = s.utility.readability.score + s.utility.meaning.score +
                     10 * s.utility.hallucinations.score;
  return o;
}

// a strictly more private than b: fewer counted inferences, or as many with a
// lower mean certainty (compared by cross-multiplication).
inline bool oracle_more_private(const OracleStep& a, const OracleStep& b, bool use_confidence) {
  if (a.count != b.count) return a.count < b.count;
  if (!use_confidence || a.count == 0) return false;
  return a.certainty_sum < b.certainty_sum;
}

inline bool oracle_dominates(const OracleStep& later, const OracleStep& earlier,
                             bool use_confidence) {
  return oracle_more_private(later, earlier, use_confidence) &&
         later.utility_points >= earlier.utility_points;
}

inline std::vector<std::pair<std::size_t, std::size_t>> oracle_anon_pairs(const Trajectory& t,
                                                                          ScoringMode mode) {
  std::vector<OracleStep> s;
  for (const auto& step : t.steps) s.push_back(oracle_step(step, mode.correct_only));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (oracle_dominates(s[j], s[i], mode.use_confidence)) out.emplace_back(i, j);
    }
  }
  return out;
}

inline std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> oracle_pref_triples(
    const Trajectory& t, ScoringMode mode) {
  std::vector<OracleStep> s;
  for (const auto& step : t.steps) s.push_back(oracle_step(step, mode.correct_only));
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t a = i + 1; a < s.size(); ++a) {
      for (std::size_t b = a + 1; b < s.size(); ++b) {
        if (oracle_dominates(s[a], s[b], mode.use_confidence)) {
          out.emplace_back(i, a, b);
        } else if (oracle_dominates(s[b], s[a], mode.use_confidence)) {
          out.emplace_back(i, b, a);
        }
      }
    }
  }
  return out;
}

// Random trajectory with distinct step texts. Utilities are drawn from a
// narrow band so that ties are frequent.
inline Trajectory random_trajectory(std::mt19937_64& rng, std::size_t id) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Trajectory t;
  t.text_id = "r" + std::to_string(id);
  const int n = pick(1, 6);
  for (int i = 0; i < n; ++i) {
    TrajectoryStep s;
    s.step_index = static_cast<std::size_t>(i);
    s.text = t.text_id + " step " + std::to_string(i);
    s.utility = {{"r", pick(7, 10)}, {"m", pick(6, 10)}, {"h", pick(0, 5) == 0 ? 0 : 1}};
    const int k = pick(0, 4);
    for (int g = 0; g < k; ++g) {
      AttributeGuess guess;
      guess.kind = static_cast<AttributeKind>(g * 2);
      guess.guesses = {"v" + std::to_string(pick(0, 3))};
      guess.certainty = CertaintyScore(pick(1, 5));
      switch (pick(0, 3)) {
        case 0: break;
        case 1: guess.scores = std::vector<double>{0.0}; break;
        case 2: guess.scores = std::vector<double>{0.5}; break;
        default: guess.scores = std::vector<double>{1.0}; break;
      }
      s.inferred.push_back(std::move(guess));
    }
    if (i + 1 < n) {
      for (const auto& g : s.inferred) {
        if (g.is_correct()) s.feedback.push_back(g.kind);
      }
    }
    t.steps.push_back(std::move(s));
  }
  return t;
}

}  // namespace anonkit::testing
