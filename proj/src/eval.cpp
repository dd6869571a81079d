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

#include "anonkit/eval.hpp"

#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/parallel.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

double utility_aggregate(double mean_meaning, double readability, double hallucination) {
  return (mean_meaning + readability + hallucination) / 3.0;
}

PrivacyEval summarize_privacy(const std::vector<std::pair<AttributeKind, double>>& scored,
                              std::size_t n_texts) {
  PrivacyEval p;
  p.n_texts = n_texts;
  double total = 0.0;
  for (const auto& [kind, score] : scored) {
    auto& s = p.per_attribute[kind];
    s.score_sum += score;
    ++s.count;
    total += score;
  }
  p.n_labeled_pairs = scored.size();
  p.micro = scored.empty() ? 0.0 : total / scored.size();
  double macro = 0.0;
  for (const auto& [kind, s] : p.per_attribute) macro += s.mean();
  p.macro = p.per_attribute.empty() ? 0.0 : macro / p.per_attribute.size();
  return p;
}

UtilityEval summarize_utility(const std::vector<UtilityAssessment>& assessments) {
  UtilityEval u;
  u.n_pairs = assessments.size();
  if (assessments.empty()) return u;
  double agg = 0.0;
  for (const auto& a : assessments) {
    u.mean_meaning += a.meaning.score / 10.0;
    u.readability += a.readability.score / 10.0;
    u.hallucination += a.hallucinations.score;
    agg += utility_score(a);
  }
  const double n = static_cast<double>(assessments.size());
  u.mean_meaning /= n;
  u.readability /= n;
  u.hallucination /= n;
  u.aggregate = agg / n;
  return u;
}

namespace {

ItemFailure failure(std::size_t i, const std::string& id, const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return {i, id, std::string(error_code_name(err->code())), e.what()};
  }
  return {i, id, "Internal", e.what()};
}

}  // namespace

PrivacyEval evaluate_privacy(const std::vector<CorpusItem>& texts, const RoleBackend& adversary,
                             const RoleBackend& judge, int parallelism,
                             const TemplateSet& templates) {
  std::vector<std::vector<std::pair<AttributeKind, double>>> per_text(texts.size());
  std::vector<std::optional<ItemFailure>> errors(texts.size());
  const auto& kinds = prompt_order_kinds();
  parallel_for(texts.size(), parallelism, [&](std::size_t i) {
    const auto& item = texts[i];
    try {
      if (item.truth.attributes.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "text has no labeled attribute");
      }
      auto inferred = infer_attributes(item.text, kinds, adversary, false, templates);
      for (auto& g : inferred) g.guesses.resize(std::min<std::size_t>(g.guesses.size(), 1));
      validate_inferences(inferred, item.truth, judge, templates);
      for (const auto& [kind, value] : item.truth.attributes) {
        double score = 0.0;
        for (const auto& g : inferred) {
          if (g.kind == kind) score = g.best_score().value_or(0.0);
        }
        per_text[i].emplace_back(kind, score);
      }
    } catch (const std::exception& e) {
      errors[i] = failure(i, item.text_id, e);
    }
  });
  std::vector<std::pair<AttributeKind, double>> scored;
  std::vector<ItemFailure> failures;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (errors[i]) {
      failures.push_back(*errors[i]);
      continue;
    }
    ++ok;
    scored.insert(scored.end(), per_text[i].begin(), per_text[i].end());
  }
  auto p = summarize_privacy(scored, ok);
  p.failures = std::move(failures);
  return p;
}

UtilityEval evaluate_utility(const std::vector<std::pair<std::string, std::string>>& pairs,
                             const RoleBackend& judge, int parallelism,
                             const TemplateSet& templates) {
  std::vector<std::optional<UtilityAssessment>> results(pairs.size());
  std::vector<std::optional<ItemFailure>> errors(pairs.size());
  parallel_for(pairs.size(), parallelism, [&](std::size_t i) {
    try {
      results[i] = judge_utility(pairs[i].first, pairs[i].second, judge, templates);
    } catch (const std::exception& e) {
      errors[i] = failure(i, std::to_string(i), e);
    }
  });
  std::vector<UtilityAssessment> ok;
  std::vector<ItemFailure> failures;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (results[i]) ok.push_back(*results[i]);
    if (errors[i]) failures.push_back(*errors[i]);
  }
  auto u = summarize_utility(ok);
  u.failures = std::move(failures);
  return u;
}

std::string corpus_digest(const std::vector<CorpusItem>& items) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& it : items) doc.push_back({it.text_id, profile_to_json(it.truth)});
  return sha256_hex(doc.dump());
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [kind, s] : r.privacy.per_attribute) {
    per[std::string(kind_name(kind))] = {{"mean", s.mean()}, {"count", s.count}};
  }
  nlohmann::json pf = nlohmann::json::array();
  for (const auto& f : r.privacy.failures) pf.push_back(to_json(f));
  nlohmann::json uf = nlohmann::json::array();
  for (const auto& f : r.utility.failures) uf.push_back(to_json(f));
  return {{"label", r.label},
          {"corpus_digest", r.corpus_digest},
          {"privacy",
           {{"micro", r.privacy.micro},
            {"macro", r.privacy.macro},
            {"per_attribute", per},
            {"n_texts", r.privacy.n_texts},
            {"n_labeled_pairs", r.privacy.n_labeled_pairs},
            {"failures", pf}}},
          {"utility",
           {{"mean_meaning", r.utility.mean_meaning},
            {"readability", r.utility.readability},
            {"hallucination", r.utility.hallucination},
            {"aggregate", r.utility.aggregate},
            {"n_pairs", r.utility.n_pairs},
            {"failures", uf}}}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.label = j.value("label", std::string());
  r.corpus_digest = j.at("corpus_digest").get<std::string>();
  const auto& p = j.at("privacy");
  r.privacy.micro = p.at("micro").get<double>();
  r.privacy.macro = p.at("macro").get<double>();
  r.privacy.n_texts = p.value("n_texts", std::size_t{0});
  r.privacy.n_labeled_pairs = p.value("n_labeled_pairs", std::size_t{0});
  const auto per = p.value("per_attribute", nlohmann::json::object());
  for (const auto& [name, v] : per.items()) {
    KindStats s;
    s.count = v.at("count").get<std::size_t>();
    s.score_sum = v.at("mean").get<double>() * s.count;
    r.privacy.per_attribute[kind_from_name(name)] = s;
  }
  const auto& u = j.at("utility");
  r.utility.mean_meaning = u.at("mean_meaning").get<double>();
  r.utility.readability = u.at("readability").get<double>();
  r.utility.hallucination = u.at("hallucination").get<double>();
  r.utility.aggregate = u.at("aggregate").get<double>();
  r.utility.n_pairs = u.value("n_pairs", std::size_t{0});
  return r;
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

constexpr std::pair<AttributeKind, const char*> kRowLabels[] = {
    {AttributeKind::kAge, "Age"},        {AttributeKind::kEducation, "Edu"},
    {AttributeKind::kGender, "Gnd"},     {AttributeKind::kIncome, "Inc"},
    {AttributeKind::kLocation, "Loc"},   {AttributeKind::kMarried, "Mar"},
    {AttributeKind::kOccupation, "Occ"}, {AttributeKind::kPobp, "PoB"},
};

}  // namespace

RenderedReport render_report(const EvalReport& before, const EvalReport& after) {
  if (before.corpus_digest != after.corpus_digest) {
    throw Error(ErrorCode::kCorpusMismatch, "reports were computed on different corpora");
  }
  RenderedReport out;
  out.overall = overall_score(before.privacy.micro, after.privacy.micro, before.utility.aggregate,
                              after.utility.aggregate);
  const std::string lb = before.label.empty() ? "before" : before.label;
  const std::string la = after.label.empty() ? "after" : after.label;

  std::vector<std::array<std::string, 3>> rows;
  rows.push_back({"Overall", "", fmt3(out.overall)});
  rows.push_back({"Privacy (micro)", fmt3(before.privacy.micro), fmt3(after.privacy.micro)});
  rows.push_back({"Privacy (macro)", fmt3(before.privacy.macro), fmt3(after.privacy.macro)});
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [kind, label] : kRowLabels) {
    auto cell = [&](const EvalReport& r) -> std::string {
      auto it = r.privacy.per_attribute.find(kind);
      return it == r.privacy.per_attribute.end() ? "-" : fmt3(it->second.mean());
    };
    rows.push_back({std::string("  ") + label, cell(before), cell(after)});
    auto mean_of = [&](const EvalReport& r) -> nlohmann::json {
      auto it = r.privacy.per_attribute.find(kind);
      return it == r.privacy.per_attribute.end() ? nlohmann::json(nullptr)
                                                 : nlohmann::json(it->second.mean());
    };
    per[std::string(kind_name(kind))] = {{lb, mean_of(before)}, {la, mean_of(after)}};
  }
  rows.push_back({"Utility", fmt3(before.utility.aggregate), fmt3(after.utility.aggregate)});
  rows.push_back({"  Mean", fmt3(before.utility.mean_meaning), fmt3(after.utility.mean_meaning)});
  rows.push_back({"  Read", fmt3(before.utility.readability), fmt3(after.utility.readability)});
  rows.push_back({"  Hall", fmt3(before.utility.hallucination), fmt3(after.utility.hallucination)});

  std::size_t w0 = 16;
  std::size_t w1 = std::max<std::size_t>(lb.size(), 8);
  std::size_t w2 = std::max<std::size_t>(la.size(), 8);
  std::ostringstream os;
  auto line = [&](const std::string& a, const std::string& b, const std::string& c) {
    os << a << std::string(w0 - std::min(w0, a.size()), ' ') << "  "
       << std::string(w1 - std::min(w1, b.size()), ' ') << b << "  "
       << std::string(w2 - std::min(w2, c.size()), ' ') << c << '\n';
  };
  line("", lb, la);
  for (const auto& r : rows) line(r[0], r[1], r[2]);
  out.text = os.str();

  out.json = {{"overall", out.overall},
              {"before", to_json(before)},
              {"after", to_json(after)},
              {"attributes", per}};
  return out;
}

std::int64_t parse_price(std::string_view text_in) {
  std::string_view s = text::trim(text_in);
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (s.empty()) throw Error(ErrorCode::kInvalidArgument, "empty price");
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  for (char c : s) {
    if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      if (seen_dot) {
        if (++frac_digits > 6) {
          throw Error(ErrorCode::kInvalidArgument, "price has more than 6 decimals: " + std::string(s));
        }
        frac = frac * 10 + (c - '0');
      } else {
        whole = whole * 10 + (c - '0');
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument, "malformed price '" + std::string(s) + "'");
    }
  }
  while (frac_digits++ < 6) frac *= 10;
  return whole * 1000000 + frac;
}

std::string CostEntry::percent(int decimals) const {
  // round(100 * num / den * 10^decimals) with half-up rounding, in integers
  std::int64_t scale = 100;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const std::int64_t scaled = (ratio_num * scale * 2 + ratio_den) / (ratio_den * 2);
  std::string digits = std::to_string(scaled);
  if (decimals > 0) {
    if (digits.size() <= static_cast<std::size_t>(decimals)) {
      digits.insert(0, decimals + 1 - digits.size(), '0');
    }
    digits.insert(digits.size() - decimals, ".");
  }
  return digits + "%";
}

std::vector<CostEntry> relative_cost(const std::vector<PriceRow>& rows, const std::string& base) {
  const PriceRow* b = nullptr;
  for (const auto& r : rows) {
    if (r.model_name == base) b = &r;
  }
  if (!b) throw Error(ErrorCode::kUnknownBase, "base model '" + base + "' not in price table");
  const std::int64_t den = parse_price(b->input_price) + parse_price(b->output_price);
  if (den == 0) throw Error(ErrorCode::kDegenerateBaseline, "base model has zero price");
  std::vector<CostEntry> out;
  for (const auto& r : rows) {
    CostEntry e;
    e.model_name = r.model_name;
    e.input_price = parse_price(r.input_price);
    e.output_price = parse_price(r.output_price);
    const std::int64_t num = e.input_price + e.output_price;
    const std::int64_t g = std::gcd(num, den);
    e.ratio_num = num / g;
    e.ratio_den = den / g;
    out.push_back(e);
  }
  return out;
}

std::vector<PriceRow> load_price_table(const std::filesystem::path& path) {
  std::vector<PriceRow> rows;
  bool header = true;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(read_file(path), '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto cols = text::split(line, ',');
    if (cols.size() != 3) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
    }
    if (header) {
      header = false;
      if (text::iequals(text::trim(cols[0]), "model")) continue;
    }
    rows.push_back({std::string(text::trim(cols[0])), std::string(text::trim(cols[1])),
                    std::string(text::trim(cols[2]))});
  }
  return rows;
}

}  // namespace anonkit
