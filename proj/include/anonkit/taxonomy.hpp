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

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace anonkit {

// Declaration order is the report row order (Age, Edu, Gnd, Inc, Loc, Mar,
// Occ, PoB).
enum class AttributeKind {
  kAge,
  kEducation,
  kGender,
  kIncome,
  kLocation,
  kMarried,
  kOccupation,
  kPobp,
};

inline constexpr std::size_t kAttributeKindCount = 8;

const std::array<AttributeKind, kAttributeKindCount>& all_kinds();
// Key order used by the adversary prompt.
const std::array<AttributeKind, kAttributeKindCount>& prompt_order_kinds();

std::string_view kind_name(AttributeKind kind);
std::optional<AttributeKind> parse_kind(std::string_view name);
AttributeKind kind_from_name(std::string_view name);  // throws kInvalidArgument

// Kinds whose guesses are judged by a language model rather than by rule.
bool is_semantic_kind(AttributeKind kind);

struct AttributeValue {
  AttributeKind kind = AttributeKind::kAge;
  std::string raw;
  std::string normalized;
  std::optional<double> years;  // set for age only

  bool operator==(const AttributeValue&) const = default;
};

struct GroundTruthProfile {
  std::string profile_id;
  std::map<AttributeKind, AttributeValue> attributes;

  const AttributeValue* find(AttributeKind kind) const;
  bool operator==(const GroundTruthProfile&) const = default;
};

enum class JudgeToken { kYes, kNo, kLessPrecise };
enum class ValidationMethod { kNumeric, kString, kSemanticJudge };

std::string_view judge_token_name(JudgeToken token);
double judge_token_score(JudgeToken token);

struct ValidationVerdict {
  double score = 0.0;  // 0, 0.5 or 1
  ValidationMethod method = ValidationMethod::kString;
  std::optional<JudgeToken> judge_token;

  bool operator==(const ValidationVerdict&) const = default;
};

// Throws kUnmappableValue for categorical kinds and kMalformedGuess for
// unparseable ages.
AttributeValue normalize_attribute(AttributeKind kind, std::string_view raw);

// Parses "28", "25-30", "25 to 30" or "mid 30s"-style strings; ranges give
// their midpoint. Returns nullopt when no number is present.
std::optional<double> parse_age(std::string_view text);

using SemanticJudge = std::function<JudgeToken(
    AttributeKind kind, const std::string& truth, const std::string& guess)>;

ValidationVerdict validate_guess(AttributeKind kind, std::string_view guess,
                                 const AttributeValue& truth,
                                 const SemanticJudge& judge = {});

struct ValidationPair {
  AttributeValue truth;
  std::string guess;
};

// Maps a "yes; no; less precise" judge reply onto the pairs, in order.
std::vector<ValidationVerdict> batch_validate(std::span<const ValidationPair> pairs,
                                              std::string_view judge_reply);

std::vector<JudgeToken> parse_judge_tokens(std::string_view judge_reply);

inline constexpr std::size_t kMaxJudgePairsPerCall = 50;

// Receives up to kMaxJudgePairsPerCall pairs and returns the raw judge reply.
using JudgeCall = std::function<std::string(std::span<const ValidationPair>)>;

// Validates every pair. Rule-decidable pairs never reach the judge; the rest
// are sent in corpus order in chunks of at most kMaxJudgePairsPerCall.
// Unparseable age guesses score 0 here instead of throwing.
std::vector<ValidationVerdict> validate_all(std::span<const ValidationPair> pairs,
                                            const JudgeCall& judge);

struct CorpusItem {
  std::string text_id;
  std::string profile_id;
  std::string text;
  GroundTruthProfile truth;
};

struct LoadDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct LoadedCorpus {
  std::vector<CorpusItem> items;
  std::vector<LoadDiagnostic> dropped;
};

// Parses {text_id, profile_id, text, truth}. Gender "single" and other
// unmappable values drop only the offending field (reported in `dropped`).
CorpusItem corpus_item_from_json(const nlohmann::json& j,
                                 std::vector<LoadDiagnostic>* dropped = nullptr,
                                 std::size_t line = 0);
nlohmann::json corpus_item_to_json(const CorpusItem& item);
GroundTruthProfile profile_from_json(const nlohmann::json& truth, std::string profile_id,
                                     std::vector<LoadDiagnostic>* dropped = nullptr,
                                     std::size_t line = 0);
nlohmann::json profile_to_json(const GroundTruthProfile& profile);

LoadedCorpus load_corpus(const std::string& path);

std::string format_number(double value);

}  // namespace anonkit
