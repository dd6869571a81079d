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

#include "anonkit/engine.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/parallel.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

std::string RoleBackend::complete(std::span<const ChatTurn> turns) const {
  if (!backend) throw Error(ErrorCode::kConfigError, "role has no backend");
  return backend->complete(turns, params);
}

void EngineConfig::check() const {
  if (max_steps < 1) throw Error(ErrorCode::kConfigError, "max_steps must be >= 1");
  if (kinds.empty()) throw Error(ErrorCode::kConfigError, "kinds must be nonempty");
  if (parallelism < 1) throw Error(ErrorCode::kConfigError, "parallelism must be >= 1");
  if (certainty_floor < CertaintyScore::kMin || certainty_floor > CertaintyScore::kMax) {
    throw Error(ErrorCode::kConfigError, "certainty_floor must be in [1, 5]");
  }
}

nlohmann::json to_json(const EngineConfig& cfg) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : cfg.kinds) kinds.push_back(kind_name(k));
  return {{"max_steps", cfg.max_steps},
          {"correct_only_feedback", cfg.correct_only_feedback},
          {"certainty_floor", cfg.certainty_floor},
          {"kinds", kinds},
          {"parallelism", cfg.parallelism},
          {"request_certainty", cfg.request_certainty}};
}

EngineConfig engine_config_from_json(const nlohmann::json& j) {
  EngineConfig cfg;
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.correct_only_feedback = j.value("correct_only_feedback", cfg.correct_only_feedback);
  cfg.certainty_floor = j.value("certainty_floor", cfg.certainty_floor);
  cfg.parallelism = j.value("parallelism", cfg.parallelism);
  cfg.request_certainty = j.value("request_certainty", cfg.request_certainty);
  if (j.contains("kinds")) {
    cfg.kinds.clear();
    for (const auto& k : j["kinds"]) cfg.kinds.push_back(kind_from_name(k.get<std::string>()));
  }
  cfg.check();
  return cfg;
}

void validate_inferences(std::vector<AttributeGuess>& inferred, const GroundTruthProfile& truth,
                         const RoleBackend& judge, const TemplateSet& templates) {
  std::vector<ValidationPair> pairs;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t g = 0; g < inferred.size(); ++g) {
    const AttributeValue* value = truth.find(inferred[g].kind);
    if (!value) continue;
    inferred[g].scores = std::vector<double>(inferred[g].guesses.size(), 0.0);
    for (std::size_t r = 0; r < inferred[g].guesses.size(); ++r) {
      pairs.push_back({*value, inferred[g].guesses[r]});
      where.emplace_back(g, r);
    }
  }
  if (pairs.empty()) return;
  JudgeCall call;
  if (judge.backend) {
    call = [&](std::span<const ValidationPair> chunk) {
      return judge.complete(render_validation_prompt(chunk, templates));
    };
  }
  auto verdicts = validate_all(pairs, call);
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    (*inferred[where[i].first].scores)[where[i].second] = verdicts[i].score;
  }
}

std::vector<AttributeGuess> infer_attributes(std::string_view text,
                                             std::span<const AttributeKind> kinds,
                                             const RoleBackend& adversary, bool request_certainty,
                                             const TemplateSet& templates) {
  AdversaryPromptOptions opts;
  opts.request_certainty = request_certainty;
  auto reply = adversary.complete(render_adversary_prompt(text, kinds, opts, templates));
  return parse_adversary_reply(reply, kinds);
}

UtilityAssessment judge_utility(std::string_view original, std::string_view adapted,
                                const RoleBackend& judge, const TemplateSet& templates) {
  return parse_utility_reply(judge.complete(render_utility_prompt(original, adapted, templates)));
}

namespace {

std::vector<AttributeKind> feedback_kinds(const std::vector<AttributeGuess>& inferred,
                                          const EngineConfig& cfg) {
  std::vector<AttributeKind> out;
  for (const auto& g : inferred) {
    if (cfg.correct_only_feedback && !g.is_correct()) continue;
    if (g.certainty.value() < cfg.certainty_floor) continue;
    out.push_back(g.kind);
  }
  return out;
}

std::vector<AttributeGuess> feedback_guesses(const TrajectoryStep& step) {
  std::vector<AttributeGuess> out;
  for (const auto& g : step.inferred) {
    if (std::find(step.feedback.begin(), step.feedback.end(), g.kind) != step.feedback.end()) {
      out.push_back(g);
    }
  }
  return out;
}

[[noreturn]] void rethrow_tagged(const Error& e, std::size_t step, const char* stage) {
  std::string what = e.what();
  const std::string prefix = std::string(error_code_name(e.code())) + ": ";
  if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
  throw Error(e.code(), "step " + std::to_string(step) + " (" + stage + "): " + what);
}

}  // namespace

Trajectory run_trajectory(const CorpusItem& item, const EngineConfig& cfg,
                          const EngineBackends& backends, const TemplateSet& templates) {
  cfg.check();
  if (text::trim(item.text).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "text " + item.text_id + " is empty");
  }
  Trajectory traj;
  traj.text_id = item.text_id;
  traj.profile_id = item.profile_id;

  const char* stage = "utility";
  std::size_t t = 0;
  try {
    TrajectoryStep first;
    first.step_index = 0;
    first.text = item.text;
    first.utility = judge_utility(item.text, item.text, backends.utility, templates);
    traj.steps.push_back(std::move(first));

    while (true) {
      TrajectoryStep& cur = traj.steps.back();
      stage = "adversary";
      cur.inferred = infer_attributes(cur.text, cfg.kinds, backends.adversary,
                                      cfg.request_certainty, templates);
      stage = "validation";
      validate_inferences(cur.inferred, item.truth, backends.judge, templates);
      cur.feedback = feedback_kinds(cur.inferred, cfg);
      if (cur.feedback.empty() || t == static_cast<std::size_t>(cfg.max_steps)) break;

      stage = "anonymizer";
      const auto guesses = feedback_guesses(cur);
      auto reply = backends.anonymizer.complete(
          render_anonymizer_prompt(cur.text, guesses, {}, templates));
      TrajectoryStep next;
      next.step_index = ++t;
      next.text = parse_anonymizer_reply(reply);
      next.stalled = next.text == cur.text;
      stage = "utility";
      next.utility = judge_utility(item.text, next.text, backends.utility, templates);
      traj.steps.push_back(std::move(next));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kFormatViolation) rethrow_tagged(e, t, stage);
    traj.status = TrajectoryStatus::kAborted;
    traj.error = "step " + std::to_string(t) + " (" + stage + "): " + e.what();
    // The step whose rewrite failed keeps its inference; nothing after it exists.
  }
  return traj;
}

nlohmann::json to_json(const ItemFailure& f) {
  return {{"index", f.index}, {"text_id", f.text_id}, {"code", f.code}, {"message", f.message}};
}

ProgressStore::ProgressStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    try {
      auto t = trajectory_from_json(j);
      done_[t.text_id] = std::move(t);
    } catch (const std::exception&) {
      // A line cut short by an interrupt is recomputed.
    }
  }
}

std::optional<Trajectory> ProgressStore::find(const std::string& text_id) const {
  std::lock_guard lock(mu_);
  auto it = done_.find(text_id);
  if (it == done_.end()) return std::nullopt;
  return it->second;
}

void ProgressStore::record(const Trajectory& t) {
  std::lock_guard lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + path_.string());
  out << to_json(t).dump() << '\n';
  done_[t.text_id] = t;
}

std::size_t ProgressStore::size() const {
  std::lock_guard lock(mu_);
  return done_.size();
}

CorpusRun run_corpus(const std::vector<CorpusItem>& corpus, const EngineConfig& cfg,
                     const EngineBackends& backends, ProgressStore* progress,
                     const TemplateSet& templates) {
  cfg.check();
  std::vector<std::optional<Trajectory>> slots(corpus.size());
  std::vector<std::optional<ItemFailure>> errors(corpus.size());
  std::atomic<std::size_t> resumed{0};
  parallel_for(corpus.size(), cfg.parallelism, [&](std::size_t i) {
    const auto& item = corpus[i];
    if (progress) {
      if (auto done = progress->find(item.text_id)) {
        slots[i] = std::move(*done);
        ++resumed;
        return;
      }
    }
    try {
      slots[i] = run_trajectory(item, cfg, backends, templates);
      if (progress) progress->record(*slots[i]);
    } catch (const Error& e) {
      errors[i] = ItemFailure{i, item.text_id, std::string(error_code_name(e.code())), e.what()};
    } catch (const std::exception& e) {
      errors[i] = ItemFailure{i, item.text_id, "Internal", e.what()};
    }
  });
  CorpusRun run;
  run.resumed = resumed;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (slots[i]) run.trajectories.push_back(std::move(*slots[i]));
    if (errors[i]) run.failures.push_back(std::move(*errors[i]));
  }
  return run;
}

nlohmann::json run_manifest(const EngineConfig& cfg, const EngineBackends& backends,
                            const TemplateSet& templates) {
  auto ident = [](const RoleBackend& r) -> nlohmann::json {
    if (!r.backend) return nullptr;
    return {{"backend", r.backend->identity()}, {"params", to_json(r.params)}};
  };
  return {{"engine", to_json(cfg)},
          {"templates", templates.digests()},
          {"backends",
           {{"anonymizer", ident(backends.anonymizer)},
            {"adversary", ident(backends.adversary)},
            {"utility", ident(backends.utility)},
            {"judge", ident(backends.judge)}}}};
}

}  // namespace anonkit
