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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/engine.hpp"

namespace anonkit {

struct KindStats {
  double score_sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count == 0 ? 0.0 : score_sum / count; }
};

struct PrivacyEval {
  double micro = 0.0;  // mean over labeled (text, kind) pairs
  double macro = 0.0;  // unweighted mean of per-kind means
  std::map<AttributeKind, KindStats> per_attribute;
  std::size_t n_texts = 0;
  std::size_t n_labeled_pairs = 0;
  std::vector<ItemFailure> failures;
};

struct UtilityEval {
  double mean_meaning = 0.0;   // meaning / 10
  double readability = 0.0;    // readability / 10
  double hallucination = 0.0;  // 1 = nothing invented
  double aggregate = 0.0;      // mean of the three components
  std::size_t n_pairs = 0;
  std::vector<ItemFailure> failures;
};

// Mean of the three normalized utility components.
double utility_aggregate(double mean_meaning, double readability, double hallucination);

// Computes privacy means from per-pair scores; exposed for oracle tests.
PrivacyEval summarize_privacy(const std::vector<std::pair<AttributeKind, double>>& scored,
                              std::size_t n_texts);
UtilityEval summarize_utility(const std::vector<UtilityAssessment>& assessments);

// Top-1 guesses of the adversary over all kinds, validated per labeled kind.
// A labeled kind the adversary leaves null scores 0. Texts fail individually.
PrivacyEval evaluate_privacy(const std::vector<CorpusItem>& texts, const RoleBackend& adversary,
                             const RoleBackend& judge, int parallelism = 1,
                             const TemplateSet& templates = TemplateSet::builtin());

UtilityEval evaluate_utility(const std::vector<std::pair<std::string, std::string>>& pairs,
                             const RoleBackend& judge, int parallelism = 1,
                             const TemplateSet& templates = TemplateSet::builtin());

struct EvalReport {
  std::string label;
  std::string corpus_digest;  // over text ids and ground truth
  PrivacyEval privacy;
  UtilityEval utility;
};

std::string corpus_digest(const std::vector<CorpusItem>& items);
nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

struct RenderedReport {
  double overall = 0.0;
  std::string text;
  nlohmann::json json;
};

// Table with Overall, Privacy and the eight attribute rows, then Utility with
// Mean/Read/Hall rows. Overall uses micro privacy and aggregate utility.
// Throws kCorpusMismatch when the reports cover different corpora.
RenderedReport render_report(const EvalReport& before, const EvalReport& after);

// Exact decimal price in millionths of a currency unit.
std::int64_t parse_price(std::string_view text);

struct CostEntry {
  std::string model_name;
  std::int64_t input_price = 0;   // millionths per 1M tokens
  std::int64_t output_price = 0;
  std::int64_t ratio_num = 0;     // relative cost as a reduced fraction
  std::int64_t ratio_den = 1;

  double relative() const { return static_cast<double>(ratio_num) / ratio_den; }
  // Percentage with `decimals` places, rounded half up.
  std::string percent(int decimals = 2) const;
};

struct PriceRow {
  std::string model_name;
  std::string input_price;
  std::string output_price;
};

// (in + out) / (base_in + base_out) per row at a 1:1 token ratio. Throws
// kUnknownBase when `base` is not among the rows.
std::vector<CostEntry> relative_cost(const std::vector<PriceRow>& rows, const std::string& base);

// CSV with header model,in_price,out_price.
std::vector<PriceRow> load_price_table(const std::filesystem::path& path);

}  // namespace anonkit
