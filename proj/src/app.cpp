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

#include "anonkit/app.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "anonkit/error.hpp"
#include "anonkit/eval.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

namespace fs = std::filesystem;

namespace {

std::optional<fs::path> path_field(const nlohmann::json& paths, const char* key,
                                   const fs::path& base) {
  if (!paths.contains(key) || paths[key].is_null()) return std::nullopt;
  fs::path p = paths[key].get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void require_exists(const std::optional<fs::path>& p, const char* what) {
  if (p && !fs::exists(*p)) {
    throw Error(ErrorCode::kConfigError, std::string(what) + " not found: " + p->string());
  }
}

BackendPreset parse_preset(const std::string& name, const nlohmann::json& j) {
  BackendPreset p;
  p.name = name;
  p.type = j.value("type", std::string("http"));
  if (p.type != "http" && p.type != "mock") {
    throw Error(ErrorCode::kConfigError, "preset " + name + ": unknown type " + p.type);
  }
  p.params.model_name = j.value("model", p.type == "mock" ? std::string("mock") : std::string());
  p.params.temperature = j.value("temperature", p.params.temperature);
  p.params.top_p = j.value("top_p", p.params.top_p);
  if (j.contains("max_tokens")) p.params.max_tokens = j["max_tokens"].get<int>();
  p.params.check();
  if (p.type == "http") {
    p.http.endpoint_url = j.value("endpoint_url", std::string());
    p.http.auth_token_env_name = j.value("auth_token_env", std::string());
    p.http.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    p.http.max_retries = j.value("max_retries", 3);
    if (j.contains("rate_limit")) {
      p.http.rate_limit.requests = j["rate_limit"].value("requests", 0);
      p.http.rate_limit.interval =
          std::chrono::milliseconds(j["rate_limit"].value("interval_ms", 1000));
    }
    p.http.check();
  }
  return p;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  RunConfig cfg;
  cfg.base_dir = base_dir;
  try {
    cfg.run_id = j.value("run_id", std::string("default"));
    cfg.seed = j.value("seed", std::uint64_t{0});
    const auto paths = j.value("paths", nlohmann::json::object());
    cfg.corpus = path_field(paths, "corpus", base_dir);
    cfg.profiles = path_field(paths, "profiles", base_dir);
    cfg.prices = path_field(paths, "prices", base_dir);
    cfg.cache = path_field(paths, "cache", base_dir);
    cfg.templates = path_field(paths, "templates", base_dir);
    cfg.mock_world = path_field(paths, "mock_world", base_dir);
    if (auto out = path_field(paths, "output_dir", base_dir)) cfg.output_dir = *out;
    else cfg.output_dir = base_dir / "runs";
    require_exists(cfg.corpus, "corpus");
    require_exists(cfg.profiles, "profiles");
    require_exists(cfg.prices, "price table");
    require_exists(cfg.templates, "templates directory");
    require_exists(cfg.mock_world, "mock world");

    const auto backends = j.value("backends", nlohmann::json::object());
    const auto presets = backends.value("presets", nlohmann::json::object());
    const auto roles = backends.value("roles", nlohmann::json::object());
    for (const auto& [name, preset] : presets.items()) {
      cfg.presets[name] = parse_preset(name, preset);
    }
    for (const auto& [role, preset] : roles.items()) {
      const auto name = preset.get<std::string>();
      if (!cfg.presets.count(name)) {
        throw Error(ErrorCode::kConfigError, "role " + role + " uses unknown preset " + name);
      }
      cfg.roles[role] = name;
    }
    cfg.engine = engine_config_from_json(j.value("engine", nlohmann::json::object()));
    cfg.datasets = dataset_config_from_json(j.value("datasets", nlohmann::json::object()));
    cfg.refine = refine_policy_from_json(j.value("refine", nlohmann::json::object()));
    cfg.hardset = hard_filter_config_from_json(j.value("hardset", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kConfigError, "config not found: " + path.string());
  auto j = nlohmann::json::parse(read_file(path), nullptr, false, true);
  if (j.is_discarded()) throw Error(ErrorCode::kConfigError, "config is not valid JSON");
  return parse_run_config(j, fs::absolute(path).parent_path());
}

nlohmann::json RunConfig::echo() const {
  auto rel = [&](const std::optional<fs::path>& p) -> nlohmann::json {
    if (!p) return nullptr;
    return fs::relative(*p, base_dir).generic_string();
  };
  nlohmann::json presets_json = nlohmann::json::object();
  for (const auto& [name, p] : presets) {
    nlohmann::json pj{{"type", p.type}, {"params", to_json(p.params)}};
    if (p.type == "http") {
      // The token itself is never read here; only the variable name is kept.
      pj["endpoint_url"] = p.http.endpoint_url;
      pj["auth_token_env"] = p.http.auth_token_env_name;
      pj["max_retries"] = p.http.max_retries;
    }
    presets_json[name] = pj;
  }
  return {{"run_id", run_id},
          {"seed", seed},
          {"paths",
           {{"corpus", rel(corpus)},
            {"profiles", rel(profiles)},
            {"prices", rel(prices)},
            {"cache", rel(cache)},
            {"templates", rel(templates)},
            {"mock_world", rel(mock_world)}}},
          {"presets", presets_json},
          {"roles", roles},
          {"engine", to_json(engine)},
          {"datasets", to_json(datasets)},
          {"refine", to_json(refine)},
          {"hardset", to_json(hardset)}};
}

// ---------------------------------------------------------------------------

BackendRegistry::BackendRegistry(const RunConfig& cfg, bool force_mock,
                                 const TemplateSet& templates) {
  std::shared_ptr<ResponseCache> cache;
  if (cfg.cache) cache = std::make_shared<ResponseCache>(*cfg.cache);
  std::map<std::string, RoleBackend> built;
  auto make_mock = [&]() {
    MockWorld world = cfg.mock_world ? load_mock_world(*cfg.mock_world) : MockWorld{};
    if (world.seed == 0) world.seed = cfg.seed;
    return std::make_shared<MockBackend>(std::move(world), templates);
  };
  auto wrap = [&](std::shared_ptr<ChatBackend> b) -> std::shared_ptr<ChatBackend> {
    if (!cache) return b;
    return std::make_shared<CachedBackend>(std::move(b), cache);
  };
  auto preset_backend = [&](const std::string& name) -> RoleBackend {
    if (auto it = built.find(name); it != built.end()) return it->second;
    const auto& p = cfg.presets.at(name);
    RoleBackend r;
    r.params = p.params;
    if (p.type == "mock") {
      r.backend = wrap(make_mock());
    } else {
      r.backend = wrap(std::make_shared<HttpChatBackend>(p.http));
    }
    built[name] = r;
    return r;
  };
  static const char* const kRoles[] = {"anonymizer", "adversary", "utility", "judge", "self"};
  if (force_mock) {
    RoleBackend mock;
    mock.backend = wrap(make_mock());
    mock.params.model_name = "mock";
    for (const char* role : kRoles) roles_[role] = mock;
    return;
  }
  for (const char* role : kRoles) {
    auto it = cfg.roles.find(role);
    if (it != cfg.roles.end()) roles_[role] = preset_backend(it->second);
  }
}

RoleBackend BackendRegistry::role(const std::string& name) const {
  auto it = roles_.find(name);
  if (it == roles_.end()) {
    throw Error(ErrorCode::kConfigError, "no backend configured for role '" + name + "'");
  }
  return it->second;
}

EngineBackends BackendRegistry::engine_backends() const {
  return {role("anonymizer"), role("adversary"), role("utility"), role("judge")};
}

// ---------------------------------------------------------------------------

RunStore::RunStore(fs::path output_dir, std::string run_id)
    : output_dir_(std::move(output_dir)), run_id_(std::move(run_id)) {
  if (run_id_.empty() || run_id_.find('/') != std::string::npos || run_id_ == "." ||
      run_id_ == "..") {
    throw Error(ErrorCode::kInvalidArgument, "invalid run id '" + run_id_ + "'");
  }
}

bool RunStore::exists() const { return fs::is_directory(root()); }

bool RunStore::stage_done(const std::string& stage) const {
  return fs::exists(stage_dir(stage) / "DONE");
}

void RunStore::mark_done(const std::string& stage, const nlohmann::json& summary) const {
  write_file(stage_dir(stage) / "DONE", summary.dump(2) + "\n");
}

void RunStore::require_stage(const std::string& stage) const {
  if (!exists()) throw Error(ErrorCode::kUnknownRun, "run '" + run_id_ + "' does not exist");
  if (!stage_done(stage)) {
    throw Error(ErrorCode::kUnknownRun,
                "run '" + run_id_ + "' has no completed " + stage + " stage");
  }
}

// ---------------------------------------------------------------------------

namespace {

struct GlobalOptions {
  std::string config;
  std::string run_id;
  std::string output_dir;
  int parallelism = 0;
  bool mock = false;
};

struct Context {
  RunConfig cfg;
  std::unique_ptr<TemplateSet> owned_templates;
  const TemplateSet* templates = &TemplateSet::builtin();
  std::unique_ptr<BackendRegistry> registry;
  std::unique_ptr<RunStore> store;
};

Context make_context(const GlobalOptions& g) {
  if (g.config.empty()) throw Error(ErrorCode::kConfigError, "--config is required");
  Context ctx;
  ctx.cfg = load_run_config(g.config);
  if (!g.output_dir.empty()) ctx.cfg.output_dir = fs::absolute(g.output_dir);
  if (!g.run_id.empty()) ctx.cfg.run_id = g.run_id;
  if (g.parallelism > 0) {
    ctx.cfg.engine.parallelism = g.parallelism;
    ctx.cfg.hardset.parallelism = g.parallelism;
  }
  if (ctx.cfg.templates) {
    ctx.owned_templates = std::make_unique<TemplateSet>(TemplateSet::load_dir(*ctx.cfg.templates));
    ctx.templates = ctx.owned_templates.get();
  }
  ctx.registry = std::make_unique<BackendRegistry>(ctx.cfg, g.mock, *ctx.templates);
  ctx.store = std::make_unique<RunStore>(ctx.cfg.output_dir, ctx.cfg.run_id);
  return ctx;
}

nlohmann::json stage_manifest(const Context& ctx, const std::string& stage) {
  return {{"stage", stage},
          {"anonkit_version", kVersion},
          {"run_id", ctx.cfg.run_id},
          {"config", ctx.cfg.echo()},
          {"templates", ctx.templates->digests()}};
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

LoadedCorpus load_corpus_checked(const std::optional<fs::path>& path, std::ostream& err) {
  if (!path) throw Error(ErrorCode::kConfigError, "no corpus given (paths.corpus or --corpus)");
  auto corpus = load_corpus(path->string());
  for (const auto& d : corpus.dropped) {
    err << "warning: " << path->filename().string() << ":" << d.line << ": " << d.message << "\n";
  }
  return corpus;
}

bool skip_if_done(const Context& ctx, const std::string& stage, std::ostream& out) {
  if (!ctx.store->stage_done(stage)) return false;
  out << stage << " already complete for run " << ctx.cfg.run_id << "\n";
  return true;
}

int cmd_synthesize(const GlobalOptions& g, const std::string& corpus_flag, std::ostream& out,
                   std::ostream& err) {
  auto ctx = make_context(g);
  if (!corpus_flag.empty()) ctx.cfg.corpus = fs::absolute(corpus_flag);
  if (skip_if_done(ctx, "synthesize", out)) return 0;
  auto corpus = load_corpus_checked(ctx.cfg.corpus, err);
  const auto dir = ctx.store->stage_dir("synthesize");
  fs::create_directories(dir);
  const auto backends = ctx.registry->engine_backends();
  ProgressStore progress(dir / "progress.jsonl");
  auto run = run_corpus(corpus.items, ctx.cfg.engine, backends, &progress, *ctx.templates);

  write_trajectories((dir / "trajectories.jsonl").string(), run.trajectories);
  std::vector<nlohmann::json> failures;
  for (const auto& f : run.failures) failures.push_back(to_json(f));
  write_file(dir / "failures.jsonl", to_jsonl(failures));
  auto manifest = stage_manifest(ctx, "synthesize");
  manifest["engine_run"] = run_manifest(ctx.cfg.engine, backends, *ctx.templates);
  manifest["corpus_digest"] = corpus_digest(corpus.items);
  manifest["counts"] = {{"items", corpus.items.size()},
                        {"trajectories", run.trajectories.size()},
                        {"failures", run.failures.size()}};
  write_json(dir / "manifest.json", manifest);
  // The journal only serves interrupted runs; its line order depends on scheduling.
  fs::remove(dir / "progress.jsonl");
  ctx.store->mark_done("synthesize", manifest["counts"]);
  out << "synthesize: " << run.trajectories.size() << " trajectories, " << run.failures.size()
      << " failures, " << run.resumed << " resumed -> " << dir.string() << "\n";
  return 0;
}

int cmd_build_datasets(const GlobalOptions& g, std::ostream& out) {
  auto ctx = make_context(g);
  ctx.store->require_stage("synthesize");
  if (skip_if_done(ctx, "build-datasets", out)) return 0;
  const auto src = ctx.store->stage_dir("synthesize") / "trajectories.jsonl";
  auto trajectories = read_trajectories(src.string());
  auto data = build_datasets(trajectories, ctx.cfg.datasets);
  const auto dir = ctx.store->stage_dir("build-datasets");
  auto manifest = stage_manifest(ctx, "build-datasets");
  manifest["datasets"] = export_datasets(data, ctx.cfg.datasets, dir, *ctx.templates);
  manifest["source_sha256"] = sha256_hex(read_file(src));
  write_json(dir / "manifest.json", manifest);
  ctx.store->mark_done("build-datasets", manifest["datasets"]["tasks"]);
  out << "build-datasets: anon " << data.anon.size() << ", priv " << data.priv.size() << ", util "
      << data.util.size() << ", pref " << data.pref.size() << " -> " << dir.string() << "\n";
  return 0;
}

struct EvaluateFlags {
  std::string before;
  std::string after;
  std::string adversary;
  std::string judge;
};

EvalReport evaluate_side(const std::vector<CorpusItem>& items,
                         const std::vector<std::pair<std::string, std::string>>& utility_pairs,
                         const std::string& label, const RoleBackend& adversary,
                         const RoleBackend& judge, const RoleBackend& utility, int parallelism,
                         const TemplateSet& templates) {
  EvalReport r;
  r.label = label;
  r.corpus_digest = corpus_digest(items);
  r.privacy = evaluate_privacy(items, adversary, judge, parallelism, templates);
  r.utility = evaluate_utility(utility_pairs, utility, parallelism, templates);
  return r;
}

int cmd_evaluate(const GlobalOptions& g, const EvaluateFlags& f, std::ostream& out,
                 std::ostream& err) {
  auto ctx = make_context(g);
  if (skip_if_done(ctx, "evaluate", out)) return 0;
  auto pick = [&](const std::string& preset, const char* role) {
    if (preset.empty() || g.mock) return ctx.registry->role(role);
    RunConfig alt = ctx.cfg;
    if (!alt.presets.count(preset)) {
      throw Error(ErrorCode::kConfigError, "unknown preset '" + preset + "'");
    }
    alt.roles[role] = preset;
    return BackendRegistry(alt, false, *ctx.templates).role(role);
  };
  const RoleBackend adversary = pick(f.adversary, "adversary");
  const RoleBackend judge = pick(f.judge, "judge");
  const RoleBackend utility = pick(f.judge, "utility");

  std::vector<CorpusItem> before;
  std::vector<CorpusItem> after;
  if (!f.before.empty() || !f.after.empty()) {
    if (f.before.empty() || f.after.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--before and --after go together");
    }
    before = load_corpus_checked(fs::path(f.before), err).items;
    after = load_corpus_checked(fs::path(f.after), err).items;
  } else {
    ctx.store->require_stage("synthesize");
    auto corpus = load_corpus_checked(ctx.cfg.corpus, err);
    std::map<std::string, const CorpusItem*> by_id;
    for (const auto& it : corpus.items) by_id[it.text_id] = &it;
    for (const auto& t : read_trajectories(
             (ctx.store->stage_dir("synthesize") / "trajectories.jsonl").string())) {
      auto it = by_id.find(t.text_id);
      if (it == by_id.end() || t.steps.empty()) {
        throw Error(ErrorCode::kCorpusMismatch, "trajectory " + t.text_id + " not in corpus");
      }
      before.push_back(*it->second);
      CorpusItem anon = *it->second;
      anon.text = t.steps.back().text;
      after.push_back(std::move(anon));
    }
  }
  if (corpus_digest(before) != corpus_digest(after)) {
    throw Error(ErrorCode::kCorpusMismatch, "before and after cover different texts or labels");
  }
  std::vector<std::pair<std::string, std::string>> same;
  std::vector<std::pair<std::string, std::string>> changed;
  for (std::size_t i = 0; i < before.size(); ++i) {
    same.emplace_back(before[i].text, before[i].text);
    changed.emplace_back(before[i].text, after[i].text);
  }
  const int par = ctx.cfg.engine.parallelism;
  auto rb = evaluate_side(before, same, "original", adversary, judge, utility, par, *ctx.templates);
  auto ra = evaluate_side(after, changed, "anonymized", adversary, judge, utility, par,
                          *ctx.templates);
  auto rendered = render_report(rb, ra);
  const auto dir = ctx.store->stage_dir("evaluate");
  write_json(dir / "report.json", rendered.json);
  write_file(dir / "report.txt", rendered.text);
  auto manifest = stage_manifest(ctx, "evaluate");
  manifest["backends"] = {{"adversary", adversary.backend->identity()},
                          {"judge", judge.backend->identity()},
                          {"utility", utility.backend->identity()}};
  write_json(dir / "manifest.json", manifest);
  ctx.store->mark_done("evaluate", {{"overall", rendered.overall}});
  out << rendered.text;
  return 0;
}

int cmd_export_report(const GlobalOptions& g, const std::string& format, std::ostream& out) {
  auto ctx = make_context(g);
  ctx.store->require_stage("evaluate");
  auto j = nlohmann::json::parse(read_file(ctx.store->stage_dir("evaluate") / "report.json"));
  auto rendered =
      render_report(eval_report_from_json(j.at("before")), eval_report_from_json(j.at("after")));
  if (format == "json") {
    out << rendered.json.dump(2) << "\n";
  } else {
    out << rendered.text;
  }
  return 0;
}

int cmd_validate_attrs(const GlobalOptions& g, const std::string& input, std::ostream& out) {
  auto ctx = make_context(g);
  std::vector<ValidationPair> pairs;
  std::size_t line = 0;
  for (const auto& rec : read_jsonl(input)) {
    ++line;
    try {
      const auto kind = kind_from_name(rec.at("type").get<std::string>());
      const auto& truth = rec.at("truth");
      const std::string raw = truth.is_string() ? truth.get<std::string>()
                                                : format_number(truth.get<double>());
      const auto& guess = rec.at("guess");
      pairs.push_back({normalize_attribute(kind, raw),
                       guess.is_string() ? guess.get<std::string>()
                                         : format_number(guess.get<double>())});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, input + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  const auto judge = ctx.registry->role("judge");
  const TemplateSet& templates = *ctx.templates;
  auto verdicts = validate_all(pairs, [&](std::span<const ValidationPair> chunk) {
    return judge.complete(render_validation_prompt(chunk, templates));
  });
  static const char* const kMethods[] = {"numeric", "string", "semantic_judge"};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    nlohmann::json j{{"type", kind_name(pairs[i].truth.kind)},
                     {"truth", pairs[i].truth.normalized},
                     {"guess", pairs[i].guess},
                     {"score", verdicts[i].score},
                     {"method", kMethods[static_cast<int>(verdicts[i].method)]}};
    if (verdicts[i].judge_token) j["judge"] = judge_token_name(*verdicts[i].judge_token);
    out << j.dump() << "\n";
  }
  return 0;
}

void write_hard_result(const fs::path& dir, const HardFilterResult& res) {
  std::vector<nlohmann::json> hard;
  std::vector<nlohmann::json> ok;
  std::vector<nlohmann::json> failures;
  for (const auto& r : res.hard) hard.push_back(to_json(r));
  for (const auto& r : res.anonymized_ok) ok.push_back(to_json(r));
  for (const auto& f : res.failures) failures.push_back(to_json(f));
  write_file(dir / "hard.jsonl", to_jsonl(hard));
  write_file(dir / "anonymized_ok.jsonl", to_jsonl(ok));
  write_file(dir / "failures.jsonl", to_jsonl(failures));
}

int cmd_filter_hard(const GlobalOptions& g, const std::string& corpus_flag, int rounds,
                    std::ostream& out, std::ostream& err) {
  auto ctx = make_context(g);
  if (!corpus_flag.empty()) ctx.cfg.corpus = fs::absolute(corpus_flag);
  if (rounds > 0) ctx.cfg.hardset.max_rounds = rounds;
  ctx.cfg.hardset.check();
  if (skip_if_done(ctx, "filter-hard", out)) return 0;
  auto corpus = load_corpus_checked(ctx.cfg.corpus, err);
  auto res = filter_hard(corpus.items, ctx.cfg.hardset, ctx.registry->engine_backends(),
                         *ctx.templates);
  const auto dir = ctx.store->stage_dir("filter-hard");
  write_hard_result(dir, res);
  auto manifest = stage_manifest(ctx, "filter-hard");
  manifest["counts"] = {{"hard", res.hard.size()},
                        {"anonymized_ok", res.anonymized_ok.size()},
                        {"failures", res.failures.size()}};
  write_json(dir / "manifest.json", manifest);
  ctx.store->mark_done("filter-hard", manifest["counts"]);
  out << "filter-hard: " << res.hard.size() << " hard, " << res.anonymized_ok.size()
      << " anonymized, " << res.failures.size() << " failures -> " << dir.string() << "\n";
  return 0;
}

int cmd_hardgen(const GlobalOptions& g, const std::string& profiles_flag, int count,
                std::ostream& out) {
  auto ctx = make_context(g);
  if (!profiles_flag.empty()) ctx.cfg.profiles = fs::absolute(profiles_flag);
  if (!ctx.cfg.profiles) throw Error(ErrorCode::kConfigError, "no profiles given");
  if (skip_if_done(ctx, "hardgen", out)) return 0;
  const auto backend = ctx.registry->role("anonymizer");
  std::vector<nlohmann::json> generated;
  std::vector<CorpusItem> produced;
  std::vector<ItemFailure> failures;
  std::size_t index = 0;
  for (const auto& rec : read_jsonl(*ctx.cfg.profiles)) {
    HardgenPersona persona;
    const auto id = rec.at("profile_id").get<std::string>();
    persona.profile = profile_from_json(rec.value("truth", nlohmann::json::object()), id);
    persona.writing_style = rec.value("writing_style", std::string());
    try {
      auto hg = generate_hard(persona, count, backend, *ctx.templates);
      generated.push_back(to_json(hg));
      for (std::size_t k = 0; k < hg.texts.size(); ++k) {
        produced.push_back({id + "-gen" + std::to_string(k), id, hg.texts[k].text, persona.profile});
      }
    } catch (const Error& e) {
      failures.push_back({index, id, std::string(error_code_name(e.code())), e.what()});
    }
    ++index;
  }
  const auto dir = ctx.store->stage_dir("hardgen");
  write_file(dir / "generated.jsonl", to_jsonl(generated));
  auto validation = filter_hard(produced, ctx.cfg.hardset, ctx.registry->engine_backends(),
                                *ctx.templates);
  validation.failures.insert(validation.failures.begin(), failures.begin(), failures.end());
  write_hard_result(dir, validation);
  auto manifest = stage_manifest(ctx, "hardgen");
  manifest["counts"] = {{"profiles", index},
                        {"texts", produced.size()},
                        {"hard", validation.hard.size()},
                        {"anonymized_ok", validation.anonymized_ok.size()}};
  write_json(dir / "manifest.json", manifest);
  ctx.store->mark_done("hardgen", manifest["counts"]);
  out << "hardgen: " << produced.size() << " texts, " << validation.hard.size()
      << " confirmed hard -> " << dir.string() << "\n";
  return 0;
}

struct RefineFlags {
  std::string text;
  std::string input;
  int iters = 0;
  int certainty_stop = 0;
  double min_utility = -1.0;
  std::string kinds;
};

int cmd_refine(const GlobalOptions& g, const RefineFlags& f, std::ostream& out) {
  auto ctx = make_context(g);
  RefinePolicy policy = ctx.cfg.refine;
  if (f.iters > 0) policy.max_iters = f.iters;
  if (f.certainty_stop > 0) policy.certainty_stop_threshold = f.certainty_stop;
  if (f.min_utility >= 0.0) policy.min_utility = f.min_utility;
  if (!f.kinds.empty()) {
    policy.kinds.clear();
    for (const auto& k : text::split(f.kinds, ',')) policy.kinds.push_back(kind_from_name(text::trim(k)));
  }
  std::string x0 = f.text;
  if (!f.input.empty()) x0 = std::string(text::trim(read_file(f.input)));
  if (x0.empty()) throw Error(ErrorCode::kInvalidArgument, "give --text or --input");
  auto report = self_refine(x0, policy, ctx.registry->role("self"), *ctx.templates);
  const auto j = to_json(report);
  write_json(ctx.store->stage_dir("refine") / ("report-" + sha256_hex(x0).substr(0, 12) + ".json"),
             j);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_cost(const std::string& prices, const std::string& base, std::ostream& out) {
  auto entries = relative_cost(load_price_table(prices), base);
  std::size_t width = 5;
  for (const auto& e : entries) width = std::max(width, e.model_name.size());
  out << "Model" << std::string(width - 5, ' ') << "  Relative cost\n";
  for (const auto& e : entries) {
    out << e.model_name << std::string(width - e.model_name.size(), ' ') << "  " << e.percent()
        << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"anonkit: adversarial anonymization, distillation data and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--run-id", g.run_id, "Run identifier under the output directory");
  app.add_option("--output-dir", g.output_dir, "Override paths.output_dir");
  app.add_option("--parallelism", g.parallelism, "Concurrent items")->check(CLI::PositiveNumber);
  app.add_flag("--mock", g.mock, "Serve every role from the mock world");
  app.set_version_flag("--version", kVersion);

  std::string corpus;
  auto* synth = app.add_subcommand("synthesize", "Generate adversarial anonymization trajectories");
  synth->add_option("--corpus", corpus, "Corpus JSONL");

  auto* build = app.add_subcommand("build-datasets", "Build and export SFT and preference data");

  RefineFlags rf;
  auto* refine = app.add_subcommand("refine", "Iterative self-refinement of one text");
  refine->add_option("--text", rf.text, "Input text");
  refine->add_option("--input", rf.input, "File holding the input text");
  refine->add_option("--iters", rf.iters, "Maximum rewrites");
  refine->add_option("--certainty-stop", rf.certainty_stop, "Stop when no inference reaches this");
  refine->add_option("--min-utility", rf.min_utility, "Utility floor in [0, 1]");
  refine->add_option("--kinds", rf.kinds, "Comma-separated attribute kinds");

  EvaluateFlags ef;
  auto* evaluate = app.add_subcommand("evaluate", "Privacy and utility evaluation report");
  evaluate->add_option("--before", ef.before, "Original corpus JSONL");
  evaluate->add_option("--after", ef.after, "Anonymized corpus JSONL");
  evaluate->add_option("--adversary", ef.adversary, "Preset for the evaluation adversary");
  evaluate->add_option("--judge", ef.judge, "Preset for validation and utility judging");

  std::string vinput;
  auto* validate = app.add_subcommand("validate-attrs", "Score guesses against ground truth");
  validate->add_option("--input", vinput, "JSONL of {type, truth, guess}")->required();

  int rounds = 0;
  auto* fh = app.add_subcommand("filter-hard", "Find texts that resist anonymization");
  fh->add_option("--corpus", corpus, "Corpus JSONL");
  fh->add_option("--rounds", rounds, "Maximum anonymization rounds");

  std::string profiles;
  int count = 20;
  auto* hg = app.add_subcommand("hardgen", "Generate hard texts from profiles");
  hg->add_option("--profiles", profiles, "Profiles JSONL");
  hg->add_option("--count", count, "Texts per profile")->check(CLI::PositiveNumber);

  std::string prices;
  std::string base;
  auto* cost = app.add_subcommand("cost", "Relative inference cost table");
  cost->add_option("--prices", prices, "CSV model,in_price,out_price")->required();
  cost->add_option("--base", base, "Reference model")->required();

  std::string format = "text";
  auto* report = app.add_subcommand("export-report", "Print the stored evaluation report");
  report->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth->parsed()) return cmd_synthesize(g, corpus, out, err);
    if (build->parsed()) return cmd_build_datasets(g, out);
    if (refine->parsed()) return cmd_refine(g, rf, out);
    if (evaluate->parsed()) return cmd_evaluate(g, ef, out, err);
    if (validate->parsed()) return cmd_validate_attrs(g, vinput, out);
    if (fh->parsed()) return cmd_filter_hard(g, corpus, rounds, out, err);
    if (hg->parsed()) return cmd_hardgen(g, profiles, count, out);
    if (cost->parsed()) return cmd_cost(prices, base, out);
    if (report->parsed()) return cmd_export_report(g, format, out);
  } catch (const Error& e) {
    err << nlohmann::json{{"error", error_code_name(e.code())}, {"message", e.detail()}}.dump()
        << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace anonkit
