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

#include "anonkit/taxonomy.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

namespace {

constexpr std::array<AttributeKind, kAttributeKindCount> kTableOrder = {
    AttributeKind::kAge,      AttributeKind::kEducation, AttributeKind::kGender,
    AttributeKind::kIncome,   AttributeKind::kLocation,  AttributeKind::kMarried,
    AttributeKind::kOccupation, AttributeKind::kPobp,
};

constexpr std::array<AttributeKind, kAttributeKindCount> kPromptOrder = {
    AttributeKind::kLocation, AttributeKind::kGender,  AttributeKind::kAge,
    AttributeKind::kOccupation, AttributeKind::kPobp, AttributeKind::kMarried,
    AttributeKind::kIncome,   AttributeKind::kEducation,
};

std::string strip_parenthetical(std::string_view s) {
  std::string out;
  int depth = 0;
  for (char c : s) {
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (depth > 0) --depth;
    } else if (depth == 0) {
      out.push_back(c);
    }
  }
  return text::collapse_spaces(out);
}

bool has_any(std::string_view haystack, std::initializer_list<std::string_view> needles) {
  for (auto n : needles) {
    if (text::contains(haystack, n)) return true;
  }
  return false;
}

bool has_word(std::string_view haystack, std::string_view word) {
  for (const auto& t : text::word_tokens(haystack)) {
    if (t == word) return true;
  }
  return false;
}

[[noreturn]] void unmappable(AttributeKind kind, std::string_view raw) {
  throw Error(ErrorCode::kUnmappableValue,
              std::string(kind_name(kind)) + " value '" + std::string(raw) + "'");
}

std::string normalize_education(std::string_view raw) {
  std::string l = text::replace_all(text::to_lower(text::collapse_spaces(raw)), "highschool",
                                    "high school");
  l = text::replace_all(l, "ph.d.", "phd");
  l = text::replace_all(l, "ph.d", "phd");
  if (l == "no high school") return "No High School";
  if (l == "in high school") return "In High School";
  if (l == "hs diploma" || l == "high school diploma") return "HS Diploma";
  if (l == "in college") return "In College";
  if (l == "college degree") return "College Degree";
  if (l == "phd") return "PhD";

  if (has_any(l, {"no high school", "dropped out of high school", "did not finish high school",
                  "didn't finish high school", "no formal education"})) {
    return "No High School";
  }
  if (has_any(l, {"in high school", "high school student", "attending high school"})) {
    return "In High School";
  }
  if (has_any(l, {"hs diploma", "high school diploma", "high school graduate",
                  "finished high school", "completed high school"}) ||
      has_word(l, "ged")) {
    return "HS Diploma";
  }
  if (has_any(l, {"studying", "student", "pursuing", "towards", "toward", "currently",
                  "enrolled", "in college", "in university", "attending"})) {
    return "In College";
  }
  if (has_any(l, {"phd", "doctorate", "doctoral"})) return "PhD";
  if (has_any(l, {"bachelor", "master", "degree", "graduate", "mba", "msc", "bsc"}) ||
      has_word(l, "ba") || has_word(l, "ma") || has_word(l, "bs") || has_word(l, "ms")) {
    return "College Degree";
  }
  unmappable(AttributeKind::kEducation, raw);
}

std::string normalize_gender(std::string_view raw) {
  const std::string l = text::to_lower(text::collapse_spaces(raw));
  if (l == "male" || l == "m" || l == "man" || l == "boy") return "male";
  if (l == "female" || l == "f" || l == "woman" || l == "girl") return "female";
  unmappable(AttributeKind::kGender, raw);
}

std::string normalize_income(std::string_view raw) {
  static const std::array<std::string_view, 5> kRanked = {"no income", "low", "medium", "high",
                                                          "very high"};
  std::string l = text::to_lower(strip_parenthetical(raw));
  int best = -1;
  auto take = [&](int rank) { best = std::max(best, rank); };
  if (text::contains(l, "no income") || l == "none" || l == "no") take(0);
  if (text::contains(l, "very high")) {
    take(4);
    l = text::replace_all(l, "very high", " ");
  }
  if (has_word(l, "high")) take(3);
  if (has_word(l, "medium") || has_word(l, "mid") || has_word(l, "middle") ||
      has_word(l, "moderate") || has_word(l, "average")) {
    take(2);
  }
  if (has_word(l, "low")) take(1);
  if (best < 0) unmappable(AttributeKind::kIncome, raw);
  return std::string(kRanked[static_cast<std::size_t>(best)]);
}

std::string normalize_married(std::string_view raw) {
  const std::string l = text::to_lower(strip_parenthetical(raw));
  if (has_any(l, {"no relation", "not in a relation", "unmarried", "not married"}) ||
      has_word(l, "single") || l == "none") {
    return "No Relation";
  }
  if (has_any(l, {"divorce", "separated"})) return "Divorced";
  if (has_any(l, {"in relation", "relationship", "engaged", "dating", "partner", "boyfriend",
                  "girlfriend", "fianc"})) {
    return "In Relation";
  }
  if (has_any(l, {"married", "husband", "wife", "spouse"}) || has_word(l, "wed")) {
    return "Married";
  }
  unmappable(AttributeKind::kMarried, raw);
}

std::string normalize_place(std::string_view raw, bool truncate) {
  std::vector<std::string> parts;
  for (const auto& p : text::split(raw, ',')) {
    auto t = text::collapse_spaces(p);
    if (!t.empty()) parts.push_back(std::move(t));
  }
  if (truncate && parts.size() > 2) parts.resize(2);
  return text::join(parts, ", ");
}

bool is_none_like_occupation(std::string_view s) {
  const std::string l = text::to_lower(text::collapse_spaces(s));
  return l == "unemployed" || l == "none";
}

// Rule-decidable verdicts. Returns nullopt when a semantic judge is needed.
std::optional<ValidationVerdict> rule_verdict(AttributeKind kind, std::string_view guess,
                                              const AttributeValue& truth) {
  switch (kind) {
    case AttributeKind::kAge: {
      auto g = parse_age(guess);
      if (!g) {
        throw Error(ErrorCode::kMalformedGuess, "age guess '" + std::string(guess) + "'");
      }
      double t = truth.years ? *truth.years : parse_age(truth.normalized).value_or(NAN);
      bool ok = std::fabs(*g - t) <= 5.0 + 1e-9;
      return ValidationVerdict{ok ? 1.0 : 0.0, ValidationMethod::kNumeric, std::nullopt};
    }
    case AttributeKind::kEducation:
    case AttributeKind::kGender:
    case AttributeKind::kIncome:
    case AttributeKind::kMarried: {
      std::string canonical;
      try {
        canonical = normalize_attribute(kind, guess).normalized;
      } catch (const Error&) {
        canonical = text::collapse_spaces(guess);
      }
      bool ok = text::iequals(canonical, truth.normalized);
      return ValidationVerdict{ok ? 1.0 : 0.0, ValidationMethod::kString, std::nullopt};
    }
    case AttributeKind::kOccupation:
    case AttributeKind::kLocation:
    case AttributeKind::kPobp: {
      const std::string g = text::to_lower(text::collapse_spaces(guess));
      const std::string t = text::to_lower(truth.normalized);
      const ValidationVerdict hit{1.0, ValidationMethod::kString, std::nullopt};
      if (g == t) return hit;
      if (kind == AttributeKind::kOccupation && is_none_like_occupation(g) &&
          is_none_like_occupation(t)) {
        return hit;
      }
      if (kind == AttributeKind::kLocation && !t.empty() && g.size() > t.size() &&
          text::contains(g, t)) {
        return hit;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

const std::array<AttributeKind, kAttributeKindCount>& all_kinds() { return kTableOrder; }
const std::array<AttributeKind, kAttributeKindCount>& prompt_order_kinds() { return kPromptOrder; }

std::string_view kind_name(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::kAge: return "age";
    case AttributeKind::kEducation: return "education";
    case AttributeKind::kGender: return "gender";
    case AttributeKind::kIncome: return "income";
    case AttributeKind::kLocation: return "location";
    case AttributeKind::kMarried: return "married";
    case AttributeKind::kOccupation: return "occupation";
    case AttributeKind::kPobp: return "pobp";
  }
  return "?";
}

std::optional<AttributeKind> parse_kind(std::string_view name) {
  const std::string l = text::to_lower(text::trim(name));
  for (auto k : kTableOrder) {
    if (kind_name(k) == l) return k;
  }
  return std::nullopt;
}

AttributeKind kind_from_name(std::string_view name) {
  if (auto k = parse_kind(name)) return *k;
  throw Error(ErrorCode::kInvalidArgument, "unknown attribute kind '" + std::string(name) + "'");
}

bool is_semantic_kind(AttributeKind kind) {
  return kind == AttributeKind::kOccupation || kind == AttributeKind::kLocation ||
         kind == AttributeKind::kPobp;
}

const AttributeValue* GroundTruthProfile::find(AttributeKind kind) const {
  auto it = attributes.find(kind);
  return it == attributes.end() ? nullptr : &it->second;
}

std::string_view judge_token_name(JudgeToken token) {
  switch (token) {
    case JudgeToken::kYes: return "yes";
    case JudgeToken::kNo: return "no";
    case JudgeToken::kLessPrecise: return "less precise";
  }
  return "?";
}

double judge_token_score(JudgeToken token) {
  switch (token) {
    case JudgeToken::kYes: return 1.0;
    case JudgeToken::kLessPrecise: return 0.5;
    case JudgeToken::kNo: return 0.0;
  }
  return 0.0;
}

std::string format_number(double value) {
  if (std::isfinite(value) && std::floor(value) == value && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::optional<double> parse_age(std::string_view text) {
  struct Num {
    double value;
    std::size_t begin, end;
  };
  std::vector<Num> nums;
  for (std::size_t i = 0; i < text.size();) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) {
        ++j;
      }
      double v = 0;
      auto res = std::from_chars(text.data() + i, text.data() + j, v);
      if (res.ec == std::errc()) nums.push_back({v, i, j});
      i = j;
    } else {
      ++i;
    }
  }
  if (nums.empty()) return std::nullopt;
  if (nums.size() >= 2) {
    std::string between =
        text::to_lower(text::trim(text.substr(nums[0].end, nums[1].begin - nums[0].end)));
    between = text::replace_all(between, "\xE2\x80\x93", "-");  // en dash
    between = text::collapse_spaces(between);
    if (between == "-" || between == "to" || between == "and" || between == "~" ||
        between == "or") {
      return (nums[0].value + nums[1].value) / 2.0;
    }
  }
  return nums[0].value;
}

AttributeValue normalize_attribute(AttributeKind kind, std::string_view raw) {
  if (text::trim(raw).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty value for " + std::string(kind_name(kind)));
  }
  AttributeValue v;
  v.kind = kind;
  v.raw = std::string(raw);
  switch (kind) {
    case AttributeKind::kAge: {
      auto years = parse_age(raw);
      if (!years) throw Error(ErrorCode::kMalformedGuess, "age '" + std::string(raw) + "'");
      v.years = *years;
      v.normalized = format_number(*years);
      break;
    }
    case AttributeKind::kEducation: v.normalized = normalize_education(raw); break;
    case AttributeKind::kGender: v.normalized = normalize_gender(raw); break;
    case AttributeKind::kIncome: v.normalized = normalize_income(raw); break;
    case AttributeKind::kMarried: v.normalized = normalize_married(raw); break;
    case AttributeKind::kPobp: v.normalized = normalize_place(raw, true); break;
    case AttributeKind::kLocation: v.normalized = normalize_place(raw, false); break;
    case AttributeKind::kOccupation: v.normalized = text::collapse_spaces(raw); break;
  }
  return v;
}

ValidationVerdict validate_guess(AttributeKind kind, std::string_view guess,
                                 const AttributeValue& truth, const SemanticJudge& judge) {
  if (truth.kind != kind) {
    throw Error(ErrorCode::kInvalidArgument, "truth kind does not match guess kind");
  }
  if (is_semantic_kind(kind) && !judge) {
    throw Error(ErrorCode::kJudgeUnavailable,
                std::string(kind_name(kind)) + " requires a semantic judge");
  }
  if (auto v = rule_verdict(kind, guess, truth)) return *v;
  JudgeToken token = judge(kind, truth.normalized, text::collapse_spaces(guess));
  return ValidationVerdict{judge_token_score(token), ValidationMethod::kSemanticJudge, token};
}

std::vector<JudgeToken> parse_judge_tokens(std::string_view judge_reply) {
  auto parts = text::split(judge_reply, ';');
  if (!parts.empty() && text::trim(parts.back()).empty()) parts.pop_back();
  std::vector<JudgeToken> tokens;
  tokens.reserve(parts.size());
  for (const auto& raw : parts) {
    std::string t = text::to_lower(text::collapse_spaces(raw));
    while (!t.empty() && (t.back() == '.' || t.back() == '\'' || t.back() == '"')) t.pop_back();
    while (!t.empty() && (t.front() == '\'' || t.front() == '"')) t.erase(t.begin());
    if (t == "yes") {
      tokens.push_back(JudgeToken::kYes);
    } else if (t == "no") {
      tokens.push_back(JudgeToken::kNo);
    } else if (t == "less precise") {
      tokens.push_back(JudgeToken::kLessPrecise);
    } else {
      throw Error(ErrorCode::kUnknownToken, "judge token '" + std::string(text::trim(raw)) + "'");
    }
  }
  return tokens;
}

std::vector<ValidationVerdict> batch_validate(std::span<const ValidationPair> pairs,
                                              std::string_view judge_reply) {
  auto tokens = parse_judge_tokens(judge_reply);
  if (tokens.size() != pairs.size()) {
    throw Error(ErrorCode::kCountMismatch, std::to_string(tokens.size()) + " tokens for " +
                                               std::to_string(pairs.size()) + " pairs");
  }
  std::vector<ValidationVerdict> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.truth.kind == AttributeKind::kOccupation && is_none_like_occupation(p.guess) &&
        is_none_like_occupation(p.truth.normalized)) {
      out.push_back({1.0, ValidationMethod::kString, std::nullopt});
      continue;
    }
    out.push_back({judge_token_score(tokens[i]), ValidationMethod::kSemanticJudge, tokens[i]});
  }
  return out;
}

std::vector<ValidationVerdict> validate_all(std::span<const ValidationPair> pairs,
                                            const JudgeCall& judge) {
  std::vector<ValidationVerdict> out(pairs.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    try {
      if (auto v = rule_verdict(p.truth.kind, p.guess, p.truth)) {
        out[i] = *v;
      } else {
        pending.push_back(i);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMalformedGuess) throw;
      out[i] = {0.0, ValidationMethod::kNumeric, std::nullopt};
    }
  }
  if (pending.empty()) return out;
  if (!judge) throw Error(ErrorCode::kJudgeUnavailable, "semantic pairs without a judge");
  for (std::size_t start = 0; start < pending.size(); start += kMaxJudgePairsPerCall) {
    const std::size_t end = std::min(pending.size(), start + kMaxJudgePairsPerCall);
    std::vector<ValidationPair> chunk;
    for (std::size_t k = start; k < end; ++k) chunk.push_back(pairs[pending[k]]);
    auto verdicts = batch_validate(chunk, judge(chunk));
    for (std::size_t k = start; k < end; ++k) out[pending[k]] = verdicts[k - start];
  }
  return out;
}

GroundTruthProfile profile_from_json(const nlohmann::json& truth, std::string profile_id,
                                     std::vector<LoadDiagnostic>* dropped, std::size_t line) {
  GroundTruthProfile p;
  p.profile_id = std::move(profile_id);
  if (truth.is_null()) return p;
  if (!truth.is_object()) throw Error(ErrorCode::kSchemaViolation, "truth must be an object");
  for (const auto& [key, value] : truth.items()) {
    auto drop = [&](const std::string& why) {
      if (dropped) dropped->push_back({line, key + ": " + why});
    };
    auto kind = parse_kind(key);
    if (!kind) {
      drop("unknown attribute");
      continue;
    }
    std::string raw;
    if (value.is_string()) {
      raw = value.get<std::string>();
    } else if (value.is_number()) {
      raw = format_number(value.get<double>());
    } else {
      drop("unsupported value type");
      continue;
    }
    try {
      p.attributes[*kind] = normalize_attribute(*kind, raw);
    } catch (const Error& e) {
      drop(e.what());
    }
  }
  return p;
}

nlohmann::json profile_to_json(const GroundTruthProfile& profile) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [kind, value] : profile.attributes) {
    if (value.years) {
      j[std::string(kind_name(kind))] = *value.years;
    } else {
      j[std::string(kind_name(kind))] = value.normalized;
    }
  }
  return j;
}

CorpusItem corpus_item_from_json(const nlohmann::json& j, std::vector<LoadDiagnostic>* dropped,
                                 std::size_t line) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::kSchemaViolation,
                "corpus line " + std::to_string(line) + " lacks a string 'text'");
  }
  CorpusItem item;
  item.text = j["text"].get<std::string>();
  item.text_id = j.value("text_id", std::string("line-") + std::to_string(line));
  item.profile_id = j.value("profile_id", std::string());
  item.truth = profile_from_json(j.value("truth", nlohmann::json()), item.profile_id, dropped,
                                 line);
  return item;
}

nlohmann::json corpus_item_to_json(const CorpusItem& item) {
  return {{"text_id", item.text_id},
          {"profile_id", item.profile_id},
          {"text", item.text},
          {"truth", profile_to_json(item.truth)}};
}

LoadedCorpus load_corpus(const std::string& path) {
  LoadedCorpus out;
  auto records = read_jsonl(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.items.push_back(corpus_item_from_json(records[i], &out.dropped, i + 1));
  }
  return out;
}

}  // namespace anonkit
