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

#include "anonkit/hardset.hpp"

#include <algorithm>

#include "anonkit/error.hpp"
#include "anonkit/parallel.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

void HardFilterConfig::check() const {
  if (max_rounds < 1) throw Error(ErrorCode::kConfigError, "max_rounds must be >= 1");
  auto in_range = [](int v) { return v >= 1 && v <= 5; };
  if (!in_range(address_threshold) || !in_range(residual_threshold)) {
    throw Error(ErrorCode::kConfigError, "thresholds must be in [1, 5]");
  }
  if (kinds.empty()) throw Error(ErrorCode::kConfigError, "kinds must be nonempty");
  if (parallelism < 1) throw Error(ErrorCode::kConfigError, "parallelism must be >= 1");
}

nlohmann::json to_json(const HardFilterConfig& cfg) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : cfg.kinds) kinds.push_back(kind_name(k));
  return {{"max_rounds", cfg.max_rounds},
          {"address_threshold", cfg.address_threshold},
          {"residual_threshold", cfg.residual_threshold},
          {"kinds", kinds},
          {"parallelism", cfg.parallelism}};
}

HardFilterConfig hard_filter_config_from_json(const nlohmann::json& j) {
  HardFilterConfig cfg;
  cfg.max_rounds = j.value("max_rounds", cfg.max_rounds);
  cfg.address_threshold = j.value("address_threshold", cfg.address_threshold);
  cfg.residual_threshold = j.value("residual_threshold", cfg.residual_threshold);
  cfg.parallelism = j.value("parallelism", cfg.parallelism);
  if (j.contains("kinds")) {
    cfg.kinds.clear();
    for (const auto& k : j["kinds"]) cfg.kinds.push_back(kind_from_name(k.get<std::string>()));
  }
  cfg.check();
  return cfg;
}

nlohmann::json to_json(const HardFilterRecord& r) {
  nlohmann::json progress = nlohmann::json::array();
  for (const auto& p : r.progress) {
    progress.push_back({{"type", kind_name(p.kind)},
                        {"reference_certainty", p.reference_certainty},
                        {"succeeded_in_round", p.succeeded_in_round
                                                   ? nlohmann::json(*p.succeeded_in_round)
                                                   : nlohmann::json(nullptr)}});
  }
  nlohmann::json residual = nlohmann::json::array();
  for (const auto& g : r.residual) residual.push_back(to_json(g));
  return {{"text_id", r.text_id},
          {"profile_id", r.profile_id},
          {"text", r.text},
          {"final_text", r.final_text},
          {"rounds", r.rounds},
          {"hard", r.hard},
          {"round_of_failure",
           r.round_of_failure ? nlohmann::json(*r.round_of_failure) : nlohmann::json(nullptr)},
          {"progress", progress},
          {"residual", residual}};
}

namespace {

std::vector<AttributeGuess> correct_only(const std::vector<AttributeGuess>& inferred) {
  std::vector<AttributeGuess> out;
  for (const auto& g : inferred) {
    if (g.is_correct()) out.push_back(g);
  }
  return out;
}

}  // namespace

HardFilterRecord filter_hard_one(const CorpusItem& item, const HardFilterConfig& cfg,
                                 const EngineBackends& backends, const TemplateSet& templates) {
  HardFilterRecord rec;
  rec.text_id = item.text_id;
  rec.profile_id = item.profile_id;
  rec.text = item.text;
  rec.final_text = item.text;

  auto infer = [&](const std::string& text) {
    auto inferred = infer_attributes(text, cfg.kinds, backends.adversary, true, templates);
    validate_inferences(inferred, item.truth, backends.judge, templates);
    return correct_only(inferred);
  };

  auto current = infer(item.text);
  for (const auto& g : current) rec.progress.push_back({g.kind, g.certainty.value(), std::nullopt});

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    std::vector<AttributeGuess> address;
    for (const auto& g : current) {
      if (g.certainty.value() >= cfg.address_threshold) address.push_back(g);
    }
    if (address.empty()) break;
    auto reply = backends.anonymizer.complete(
        render_anonymizer_prompt(rec.final_text, address, {}, templates));
    rec.final_text = parse_anonymizer_reply(reply);
    rec.rounds = round;
    current = infer(rec.final_text);
    for (auto& p : rec.progress) {
      if (p.succeeded_in_round) continue;
      auto it = std::find_if(current.begin(), current.end(),
                             [&](const AttributeGuess& g) { return g.kind == p.kind; });
      if (it == current.end() || it->certainty.value() < p.reference_certainty) {
        p.succeeded_in_round = round;
      }
    }
  }

  for (const auto& g : current) {
    if (g.certainty.value() > cfg.residual_threshold) rec.residual.push_back(g);
  }
  rec.hard = !rec.residual.empty();
  if (rec.hard) rec.round_of_failure = rec.rounds;
  return rec;
}

HardFilterResult filter_hard(const std::vector<CorpusItem>& corpus, const HardFilterConfig& cfg,
                             const EngineBackends& backends, const TemplateSet& templates) {
  cfg.check();
  std::vector<std::optional<HardFilterRecord>> recs(corpus.size());
  std::vector<std::optional<ItemFailure>> errors(corpus.size());
  parallel_for(corpus.size(), cfg.parallelism, [&](std::size_t i) {
    try {
      if (corpus[i].truth.attributes.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "text has no ground truth");
      }
      recs[i] = filter_hard_one(corpus[i], cfg, backends, templates);
    } catch (const Error& e) {
      errors[i] = ItemFailure{i, corpus[i].text_id, std::string(error_code_name(e.code())), e.what()};
    }
  });
  HardFilterResult out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (errors[i]) out.failures.push_back(*errors[i]);
    if (!recs[i]) continue;
    (recs[i]->hard ? out.hard : out.anonymized_ok).push_back(std::move(*recs[i]));
  }
  return out;
}

nlohmann::json to_json(const HardGenRecord& r) {
  nlohmann::json texts = nlohmann::json::array();
  for (const auto& t : r.texts) texts.push_back({{"plan", t.plan}, {"text", t.text}});
  return {{"profile_id", r.profile_id}, {"topics", r.topics}, {"texts", texts}};
}

namespace {

[[noreturn]] void violation(const std::string& what) {
  throw Error(ErrorCode::kSchemaViolation, what);
}

void only_keys(const nlohmann::json& obj, std::initializer_list<const char*> keys,
               const std::string& where) {
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
      violation(where + " has unexpected property '" + k + "'");
    }
  }
}

std::string nonempty_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) violation(where + " is missing '" + key + "'");
  if (!obj[key].is_string()) violation(where + "." + key + " must be a string");
  auto s = obj[key].get<std::string>();
  if (text::trim(s).empty()) violation(where + "." + key + " is empty");
  return s;
}

bool first_person(std::string_view text) {
  static const char* const kWords[] = {"i", "me", "my", "mine", "myself", "we", "our", "us", "im"};
  for (const auto& w : text::word_tokens(text)) {
    for (const char* k : kWords) {
      if (w == k) return true;
    }
  }
  return false;
}

}  // namespace

HardGenRecord parse_hardgen_reply(const nlohmann::json& reply, int count) {
  if (!reply.is_object()) violation("reply must be an object");
  only_keys(reply, {"topics", "texts"}, "reply");
  if (!reply.contains("topics") || !reply["topics"].is_array()) violation("'topics' must be an array");
  if (!reply.contains("texts") || !reply["texts"].is_array()) violation("'texts' must be an array");
  HardGenRecord rec;
  for (const auto& t : reply["topics"]) {
    if (!t.is_string() || text::trim(t.get<std::string>()).empty()) {
      violation("every topic must be a nonempty string");
    }
    rec.topics.push_back(t.get<std::string>());
  }
  std::size_t idx = 0;
  for (const auto& item : reply["texts"]) {
    const std::string where = "texts[" + std::to_string(idx++) + "]";
    if (!item.is_object()) violation(where + " must be an object");
    only_keys(item, {"plan", "text"}, where);
    HardGenText t{nonempty_string(item, "plan", where), nonempty_string(item, "text", where)};
    if (!first_person(t.text)) violation(where + ".text is not written in the first person");
    rec.texts.push_back(std::move(t));
  }
  if (rec.topics.size() != static_cast<std::size_t>(count) ||
      rec.texts.size() != static_cast<std::size_t>(count)) {
    violation("expected " + std::to_string(count) + " topics and texts, got " +
              std::to_string(rec.topics.size()) + " and " + std::to_string(rec.texts.size()));
  }
  return rec;
}

HardGenRecord generate_hard(const HardgenPersona& persona, int count, const RoleBackend& backend,
                            const TemplateSet& templates) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "count must be >= 1");
  RoleBackend structured = backend;
  structured.params.response_format = nlohmann::json{
      {"type", "json_schema"},
      {"json_schema",
       {{"name", "generate_hard"}, {"strict", true}, {"schema", hardgen_response_schema()}}}};
  const auto reply = structured.complete(render_hardgen_prompt(persona, count, templates));
  auto rec = parse_hardgen_reply(extract_json_object(reply), count);
  rec.profile_id = persona.profile.profile_id;
  return rec;
}

}  // namespace anonkit
