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

#include "anonkit/dataset.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"

namespace anonkit {

void DatasetConfig::check() const {
  if (pref_cap_per_trajectory && *pref_cap_per_trajectory == 0) {
    throw Error(ErrorCode::kConfigError, "pref_cap_per_trajectory must be positive when set");
  }
}

nlohmann::json to_json(const DatasetConfig& cfg) {
  nlohmann::json j{{"correct_only", cfg.mode.correct_only},
                   {"use_confidence", cfg.mode.use_confidence},
                   {"adv_feedback", cfg.adv_feedback},
                   {"utility_feedback", cfg.utility_feedback},
                   {"include_empty_priv", cfg.include_empty_priv},
                   {"dedup", cfg.dedup}};
  j["pref_cap_per_trajectory"] =
      cfg.pref_cap_per_trajectory ? nlohmann::json(*cfg.pref_cap_per_trajectory) : nlohmann::json(nullptr);
  return j;
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig cfg;
  cfg.mode.correct_only = j.value("correct_only", cfg.mode.correct_only);
  cfg.mode.use_confidence = j.value("use_confidence", cfg.mode.use_confidence);
  cfg.adv_feedback = j.value("adv_feedback", cfg.adv_feedback);
  cfg.utility_feedback = j.value("utility_feedback", cfg.utility_feedback);
  cfg.include_empty_priv = j.value("include_empty_priv", cfg.include_empty_priv);
  cfg.dedup = j.value("dedup", cfg.dedup);
  if (j.contains("pref_cap_per_trajectory") && !j["pref_cap_per_trajectory"].is_null()) {
    cfg.pref_cap_per_trajectory = j["pref_cap_per_trajectory"].get<std::size_t>();
  }
  cfg.check();
  return cfg;
}

namespace {

std::vector<AttributeGuess> addressed(const TrajectoryStep& s) {
  std::vector<AttributeGuess> out;
  for (const auto& g : s.inferred) {
    if (std::find(s.feedback.begin(), s.feedback.end(), g.kind) != s.feedback.end()) {
      out.push_back(g);
    }
  }
  return out;
}

template <typename T, typename Key>
void dedup_by(std::vector<T>& records, Key key) {
  std::set<decltype(key(records.front()))> seen;
  std::vector<T> kept;
  kept.reserve(records.size());
  for (auto& r : records) {
    if (seen.insert(key(r)).second) kept.push_back(std::move(r));
  }
  records = std::move(kept);
}

}  // namespace

std::vector<AnonPairRecord> build_anon_pairs(const Trajectory& t, const DatasetConfig& cfg) {
  std::vector<AnonPairRecord> out;
  const auto n = t.steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!dominates(t.steps[j], t.steps[i], cfg.mode)) continue;
      AnonPairRecord r;
      r.trajectory_id = t.text_id;
      r.i = i;
      r.j = j;
      r.input_text = t.steps[i].text;
      r.target_text = t.steps[j].text;
      if (cfg.adv_feedback) r.feedback = addressed(t.steps[i]);
      if (cfg.utility_feedback) r.utility = t.steps[i].utility;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<InferenceRecord> build_priv_dataset(const Trajectory& t, const DatasetConfig& cfg) {
  std::vector<InferenceRecord> out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i].inferred.empty() && !cfg.include_empty_priv) continue;
    out.push_back({t.text_id, i, t.steps[i].text, t.steps[i].inferred});
  }
  return out;
}

std::vector<UtilityRecord> build_util_dataset(const Trajectory& t) {
  std::vector<UtilityRecord> out;
  if (t.steps.empty()) return out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    out.push_back({t.text_id, i, t.steps.front().text, t.steps[i].text, t.steps[i].utility});
  }
  return out;
}

std::vector<PreferenceTriple> build_pref_triples(const Trajectory& t, const DatasetConfig& cfg) {
  std::vector<PreferenceTriple> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  const auto n = t.steps.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = i + 1; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        std::size_t w;
        std::size_t l;
        if (dominates(t.steps[a], t.steps[b], cfg.mode)) {
          w = a;
          l = b;
        } else if (dominates(t.steps[b], t.steps[a], cfg.mode)) {
          w = b;
          l = a;
        } else {
          continue;
        }
        if (cfg.pref_cap_per_trajectory && out.size() >= *cfg.pref_cap_per_trajectory) return out;
        if (!seen.emplace(t.steps[i].text, t.steps[w].text, t.steps[l].text).second) continue;
        PreferenceTriple p;
        p.trajectory_id = t.text_id;
        p.i = i;
        p.w = w;
        p.l = l;
        p.prompt_text = t.steps[i].text;
        p.chosen = t.steps[w].text;
        p.rejected = t.steps[l].text;
        if (cfg.adv_feedback) p.feedback = addressed(t.steps[i]);
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

Datasets build_datasets(const std::vector<Trajectory>& trajectories, const DatasetConfig& cfg) {
  cfg.check();
  Datasets d;
  for (const auto& t : trajectories) {
    auto anon = build_anon_pairs(t, cfg);
    auto priv = build_priv_dataset(t, cfg);
    auto util = build_util_dataset(t);
    auto pref = build_pref_triples(t, cfg);
    d.anon.insert(d.anon.end(), anon.begin(), anon.end());
    d.priv.insert(d.priv.end(), priv.begin(), priv.end());
    d.util.insert(d.util.end(), util.begin(), util.end());
    d.pref.insert(d.pref.end(), pref.begin(), pref.end());
  }
  if (cfg.dedup) {
    if (!d.anon.empty()) {
      dedup_by(d.anon, [](const AnonPairRecord& r) {
        return std::make_pair(r.input_text, r.target_text);
      });
    }
    if (!d.priv.empty()) {
      dedup_by(d.priv, [](const InferenceRecord& r) {
        nlohmann::json target = nlohmann::json::array();
        for (const auto& g : r.target) target.push_back(to_json(g));
        return std::make_pair(r.text, target.dump());
      });
    }
    if (!d.util.empty()) {
      dedup_by(d.util, [](const UtilityRecord& r) { return std::make_pair(r.original, r.adapted); });
    }
    if (!d.pref.empty()) {
      dedup_by(d.pref, [](const PreferenceTriple& r) {
        return std::make_tuple(r.prompt_text, r.chosen, r.rejected);
      });
    }
  }
  return d;
}

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::kAnon: return "anon";
    case TaskKind::kPriv: return "priv";
    case TaskKind::kUtil: return "util";
    case TaskKind::kPref: return "pref";
  }
  return "?";
}

namespace {

nlohmann::json messages_json(const std::vector<ChatTurn>& turns) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : turns) a.push_back(to_json(t));
  return a;
}

nlohmann::json assistant(const std::string& content) {
  return to_json(ChatTurn{ChatRole::kAssistant, content});
}

nlohmann::json guesses_json(const std::vector<AttributeGuess>& gs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& g : gs) a.push_back(to_json(g));
  return a;
}

std::vector<AttributeGuess> guesses_from(const nlohmann::json& a) {
  std::vector<AttributeGuess> out;
  for (const auto& g : a) out.push_back(guess_from_json(g));
  return out;
}

std::vector<ChatTurn> anonymizer_turns(const std::string& text,
                                       const std::vector<AttributeGuess>& feedback,
                                       const std::optional<UtilityAssessment>& utility,
                                       const TemplateSet& templates) {
  AnonymizerPromptOptions opts;
  opts.allow_empty_feedback = true;
  if (utility) opts.utility = &*utility;
  return render_anonymizer_prompt(text, feedback, opts, templates);
}

const nlohmann::json& meta_of(const nlohmann::json& line, std::string_view task) {
  const auto& m = line.at("metadata");
  if (m.value("task", std::string()) != task) {
    throw Error(ErrorCode::kSchemaViolation, "expected a " + std::string(task) + " record");
  }
  return m;
}

std::string user_content(const nlohmann::json& messages) {
  for (const auto& m : messages) {
    if (m.at("role") == "user") return m.at("content").get<std::string>();
  }
  throw Error(ErrorCode::kSchemaViolation, "record has no user message");
}

std::string assistant_content(const nlohmann::json& messages) {
  for (const auto& m : messages) {
    if (m.at("role") == "assistant") return m.at("content").get<std::string>();
  }
  throw Error(ErrorCode::kSchemaViolation, "record has no assistant message");
}

std::map<std::string, std::string> slots_of(PromptFamily family, const std::string& user,
                                            const TemplateSet& templates) {
  const std::string& tpl = templates.get(family).user_text_with_slots;
  auto slots = match_template(tpl, user);
  if (!slots && family == PromptFamily::kAnonymizer) {
    slots = match_template([&] {
      std::string t = tpl;
      auto at = t.find("{{feedback}}\n\n");
      if (at != std::string::npos) t.erase(at, 14);
      return t;
    }(), user);
  }
  if (!slots) throw Error(ErrorCode::kSchemaViolation, "user message does not match template");
  return *slots;
}

}  // namespace

nlohmann::json export_record(const AnonPairRecord& r, const TemplateSet& templates) {
  auto msgs = messages_json(anonymizer_turns(r.input_text, r.feedback, r.utility, templates));
  msgs.push_back(assistant(serialize_anonymizer_reply(r.target_text)));
  nlohmann::json meta{{"task", "anon"},
                      {"trajectory_id", r.trajectory_id},
                      {"i", r.i},
                      {"j", r.j},
                      {"feedback", guesses_json(r.feedback)}};
  meta["utility"] = r.utility ? to_json(*r.utility) : nlohmann::json(nullptr);
  return {{"messages", msgs}, {"metadata", meta}};
}

nlohmann::json export_record(const InferenceRecord& r, const TemplateSet& templates) {
  const auto& kinds = prompt_order_kinds();
  AdversaryPromptOptions opts;
  opts.request_certainty = true;
  auto msgs = messages_json(render_adversary_prompt(r.text, kinds, opts, templates));
  msgs.push_back(assistant(serialize_adversary_reply(r.target, kinds, true)));
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& g : r.target) {
    if (g.scores) scores[std::string(kind_name(g.kind))] = *g.scores;
  }
  return {{"messages", msgs},
          {"metadata",
           {{"task", "priv"}, {"trajectory_id", r.trajectory_id}, {"step", r.step},
            {"scores", scores}}}};
}

nlohmann::json export_record(const UtilityRecord& r, const TemplateSet& templates) {
  auto msgs = messages_json(render_utility_prompt(r.original, r.adapted, templates));
  msgs.push_back(assistant(serialize_utility_reply(r.target)));
  return {{"messages", msgs},
          {"metadata", {{"task", "util"}, {"trajectory_id", r.trajectory_id}, {"step", r.step}}}};
}

nlohmann::json export_record(const PreferenceTriple& r, const TemplateSet& templates) {
  return {{"prompt", messages_json(anonymizer_turns(r.prompt_text, r.feedback, {}, templates))},
          {"chosen", nlohmann::json::array({assistant(serialize_anonymizer_reply(r.chosen))})},
          {"rejected", nlohmann::json::array({assistant(serialize_anonymizer_reply(r.rejected))})},
          {"metadata",
           {{"task", "pref"},
            {"trajectory_id", r.trajectory_id},
            {"i", r.i},
            {"w", r.w},
            {"l", r.l},
            {"feedback", guesses_json(r.feedback)}}}};
}

AnonPairRecord import_anon(const nlohmann::json& line, const TemplateSet& templates) {
  const auto& meta = meta_of(line, "anon");
  const auto& msgs = line.at("messages");
  AnonPairRecord r;
  r.trajectory_id = meta.at("trajectory_id").get<std::string>();
  r.i = meta.at("i").get<std::size_t>();
  r.j = meta.at("j").get<std::size_t>();
  r.input_text = slots_of(PromptFamily::kAnonymizer, user_content(msgs), templates)["comments"];
  r.target_text = parse_anonymizer_reply(assistant_content(msgs));
  r.feedback = guesses_from(meta.at("feedback"));
  if (!meta.at("utility").is_null()) r.utility = utility_from_json(meta["utility"]);
  return r;
}

InferenceRecord import_priv(const nlohmann::json& line, const TemplateSet& templates) {
  const auto& meta = meta_of(line, "priv");
  const auto& msgs = line.at("messages");
  InferenceRecord r;
  r.trajectory_id = meta.at("trajectory_id").get<std::string>();
  r.step = meta.at("step").get<std::size_t>();
  r.text = slots_of(PromptFamily::kAdversary, user_content(msgs), templates)["text"];
  r.target = parse_adversary_reply(assistant_content(msgs), prompt_order_kinds());
  const auto& scores = meta.at("scores");
  for (auto& g : r.target) {
    const std::string key(kind_name(g.kind));
    if (scores.contains(key)) g.scores = scores[key].get<std::vector<double>>();
  }
  return r;
}

UtilityRecord import_util(const nlohmann::json& line, const TemplateSet& templates) {
  const auto& meta = meta_of(line, "util");
  const auto& msgs = line.at("messages");
  UtilityRecord r;
  r.trajectory_id = meta.at("trajectory_id").get<std::string>();
  r.step = meta.at("step").get<std::size_t>();
  auto slots = slots_of(PromptFamily::kUtility, user_content(msgs), templates);
  r.original = slots["original"];
  r.adapted = slots["adapted"];
  r.target = parse_utility_reply(assistant_content(msgs));
  return r;
}

PreferenceTriple import_pref(const nlohmann::json& line, const TemplateSet& templates) {
  const auto& meta = meta_of(line, "pref");
  PreferenceTriple r;
  r.trajectory_id = meta.at("trajectory_id").get<std::string>();
  r.i = meta.at("i").get<std::size_t>();
  r.w = meta.at("w").get<std::size_t>();
  r.l = meta.at("l").get<std::size_t>();
  r.prompt_text =
      slots_of(PromptFamily::kAnonymizer, user_content(line.at("prompt")), templates)["comments"];
  r.chosen = parse_anonymizer_reply(assistant_content(line.at("chosen")));
  r.rejected = parse_anonymizer_reply(assistant_content(line.at("rejected")));
  r.feedback = guesses_from(meta.at("feedback"));
  return r;
}

nlohmann::json export_datasets(const Datasets& data, const DatasetConfig& cfg,
                               const std::filesystem::path& dir, const TemplateSet& templates) {
  nlohmann::json tasks = nlohmann::json::object();
  auto write = [&](TaskKind task, const std::vector<nlohmann::json>& lines) {
    const std::string name(task_name(task));
    const auto path = dir / (name + ".jsonl");
    const std::string content = to_jsonl(lines);
    write_file(path, content);
    tasks[name] = {{"path", path.filename().string()},
                   {"count", lines.size()},
                   {"sha256", sha256_hex(content)}};
  };
  std::vector<nlohmann::json> lines;
  for (const auto& r : data.anon) lines.push_back(export_record(r, templates));
  write(TaskKind::kAnon, lines);
  lines.clear();
  for (const auto& r : data.priv) lines.push_back(export_record(r, templates));
  write(TaskKind::kPriv, lines);
  lines.clear();
  for (const auto& r : data.util) lines.push_back(export_record(r, templates));
  write(TaskKind::kUtil, lines);
  lines.clear();
  for (const auto& r : data.pref) lines.push_back(export_record(r, templates));
  write(TaskKind::kPref, lines);
  return {{"tasks", tasks}, {"config", to_json(cfg)}, {"templates", templates.digests()}};
}

}  // namespace anonkit
