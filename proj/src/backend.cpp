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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "anonkit/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

void GenerationParams::check() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
  }
  if (max_tokens && *max_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
  }
}

nlohmann::json to_json(const GenerationParams& p) {
  nlohmann::json j{{"model", p.model_name}, {"temperature", p.temperature}, {"top_p", p.top_p}};
  if (p.max_tokens) j["max_tokens"] = *p.max_tokens;
  if (p.response_format) j["response_format"] = *p.response_format;
  return j;
}

GenerationParams params_from_json(const nlohmann::json& j) {
  GenerationParams p;
  p.model_name = j.value("model", std::string());
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  if (j.contains("max_tokens")) p.max_tokens = j["max_tokens"].get<int>();
  if (j.contains("response_format")) p.response_format = j["response_format"];
  p.check();
  return p;
}

std::string cache_key(std::span<const ChatTurn> turns, const GenerationParams& params,
                      std::string_view scope) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& t : turns) messages.push_back(to_json(t));
  // nlohmann::json keeps object keys sorted, which makes dump() canonical.
  nlohmann::json doc{{"scope", scope}, {"turns", messages}, {"params", to_json(params)}};
  return sha256_hex(doc.dump());
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(RateLimit limit, ClockFn clock, SleepFn sleep)
    : limit_(limit), clock_(std::move(clock)), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](SteadyClock::duration d) { std::this_thread::sleep_for(d); };
  tokens_ = limit_.requests;
  last_ = clock_();
}

SteadyClock::time_point RateLimiter::acquire() {
  if (limit_.requests <= 0) return clock_();
  SteadyClock::duration wait{0};
  SteadyClock::time_point granted;
  {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    const double per_ns = static_cast<double>(limit_.requests) /
                          std::chrono::duration_cast<std::chrono::nanoseconds>(limit_.interval).count();
    if (now > last_) {
      const auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(now - last_).count();
      tokens_ = std::min<double>(limit_.requests, tokens_ + elapsed * per_ns);
      last_ = now;
    }
    tokens_ -= 1.0;
    if (tokens_ < 0.0) {
      wait = std::chrono::nanoseconds(static_cast<std::int64_t>(std::ceil(-tokens_ / per_ns)));
    }
    granted = now + wait;
  }
  if (wait.count() > 0) sleep_(wait);
  return granted;
}

// ---------------------------------------------------------------------------

namespace {

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key")) continue;
    entries_[j["key"].get<std::string>()] = Entry{j.value("params", nlohmann::json::object()),
                                                  j.value("reply", std::string())};
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key,
                                                 const nlohmann::json& params) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.params != params) return std::nullopt;
  return it->second.reply;
}

void ResponseCache::insert(const std::string& key, const nlohmann::json& params,
                           const std::string& reply) {
  std::lock_guard lock(mu_);
  if (entries_.count(key)) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to cache " + path_.string());
  nlohmann::json rec{{"key", key}, {"params", params}, {"reply", reply},
                     {"timestamp", utc_timestamp()}};
  out << rec.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed on cache " + path_.string());
  entries_[key] = Entry{params, reply};
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CachedBackend::CachedBackend(std::shared_ptr<ChatBackend> inner,
                             std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedBackend::complete(std::span<const ChatTurn> turns,
                                    const GenerationParams& params) {
  const std::string scope = inner_->identity();
  const std::string key = cache_key(turns, params, scope);
  nlohmann::json stored = to_json(params);
  stored["scope"] = scope;
  if (auto hit = cache_->lookup(key, stored)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  std::string reply = inner_->complete(turns, params);
  cache_->insert(key, stored, reply);
  return reply;
}

// ---------------------------------------------------------------------------

void BackendConfig::check() const {
  if (endpoint_url.empty()) throw Error(ErrorCode::kConfigError, "endpoint_url is empty");
  if (endpoint_url.rfind("http://", 0) != 0 && endpoint_url.rfind("https://", 0) != 0) {
    throw Error(ErrorCode::kConfigError, "endpoint_url must start with http:// or https://");
  }
  if (timeout.count() <= 0) throw Error(ErrorCode::kConfigError, "timeout must be positive");
  if (max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  if (rate_limit.requests < 0 || rate_limit.interval.count() <= 0) {
    throw Error(ErrorCode::kConfigError, "invalid rate limit");
  }
}

HttpChatBackend::HttpChatBackend(BackendConfig config, SleepFn sleep,
                                 std::shared_ptr<RateLimiter> limiter)
    : config_(std::move(config)), sleep_(std::move(sleep)), limiter_(std::move(limiter)) {
  config_.check();
  if (!sleep_) sleep_ = [](SteadyClock::duration d) { std::this_thread::sleep_for(d); };
  if (!limiter_ && config_.rate_limit.requests > 0) {
    limiter_ = std::make_shared<RateLimiter>(config_.rate_limit);
  }
  const std::string& url = config_.endpoint_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "endpoint_url needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpChatBackend::identity() const { return "http:" + config_.endpoint_url; }

std::string HttpChatBackend::complete(std::span<const ChatTurn> turns,
                                      const GenerationParams& params) {
  if (turns.empty()) throw Error(ErrorCode::kInvalidArgument, "no chat turns");
  params.check();
  std::string token;
  if (!config_.auth_token_env_name.empty()) {
    const char* v = std::getenv(config_.auth_token_env_name.c_str());
    if (v == nullptr || *v == '\0') {
      throw Error(ErrorCode::kAuthError,
                  "environment variable " + config_.auth_token_env_name + " is not set");
    }
    token = v;
  }

  nlohmann::json body = to_json(params);
  body["messages"] = nlohmann::json::array();
  for (const auto& t : turns) body["messages"].push_back(to_json(t));
  const std::string payload = body.dump();

  httplib::Client client(scheme_host_port_);
  const auto timeout = config_.timeout;
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                (timeout.count() % 1000) * 1000);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                          (timeout.count() % 1000) * 1000);
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                           (timeout.count() % 1000) * 1000);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  auto backoff = config_.backoff_initial;
  std::string last_failure;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleep_(backoff);
      backoff = std::min(backoff * 2, config_.backoff_max);
    }
    if (limiter_) limiter_->acquire();
    ++attempts_;
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_failure = httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw Error(ErrorCode::kAuthError, "provider rejected credentials (status " +
                                             std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      last_status = status;
      last_failure = res->body.substr(0, 200);
      continue;
    }
    if (status < 200 || status >= 300) throw ProviderError(status, res->body.substr(0, 200));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    try {
      if (j.is_discarded()) throw std::invalid_argument("body is not JSON");
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedJson,
                  std::string("unexpected completion body: ") + e.what());
    }
  }
  if (last_status == 429) {
    throw Error(ErrorCode::kRateLimited, "still rate limited after " +
                                             std::to_string(config_.max_retries + 1) + " attempts");
  }
  if (last_status >= 500) throw ProviderError(last_status, last_failure);
  throw Error(ErrorCode::kTransportError, last_failure + " after " +
                                              std::to_string(config_.max_retries + 1) +
                                              " attempts");
}

// ---------------------------------------------------------------------------

MockWorld mock_world_from_json(const nlohmann::json& j) {
  MockWorld w;
  try {
    for (const auto& l : j.value("ladders", nlohmann::json::array())) {
      MockLadder ladder;
      ladder.id = l.value("id", std::string());
      ladder.kind = kind_from_name(l.at("kind").get<std::string>());
      ladder.value = l.at("value").get<std::string>();
      ladder.tiers = l.at("tiers").get<std::vector<std::string>>();
      ladder.base_certainty = l.value("base_certainty", 5);
      ladder.fixed = l.value("fixed", false);
      if (ladder.tiers.empty()) throw Error(ErrorCode::kConfigError, "ladder without tiers");
      w.ladders.push_back(std::move(ladder));
    }
    for (const auto& r : j.value("rules", nlohmann::json::array())) {
      ScriptedRule rule;
      const auto family = r.at("family").get<std::string>();
      bool known = false;
      for (auto f : {PromptFamily::kAnonymizer, PromptFamily::kAdversary, PromptFamily::kUtility,
                     PromptFamily::kValidation, PromptFamily::kHardgen}) {
        if (family_name(f) == family) {
          rule.family = f;
          known = true;
        }
      }
      if (!known) throw Error(ErrorCode::kConfigError, "unknown prompt family " + family);
      rule.keywords = r.value("keywords", std::vector<std::string>{});
      rule.reply = r.at("reply").get<std::string>();
      w.rules.push_back(std::move(rule));
    }
    w.format_violation_token = j.value("format_violation_token", w.format_violation_token);
    w.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("mock world: ") + e.what());
  }
  return w;
}

nlohmann::json to_json(const MockWorld& world) {
  nlohmann::json ladders = nlohmann::json::array();
  for (const auto& l : world.ladders) {
    ladders.push_back({{"id", l.id},
                       {"kind", kind_name(l.kind)},
                       {"value", l.value},
                       {"tiers", l.tiers},
                       {"base_certainty", l.base_certainty},
                       {"fixed", l.fixed}});
  }
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : world.rules) {
    rules.push_back({{"family", family_name(r.family)}, {"keywords", r.keywords}, {"reply", r.reply}});
  }
  return {{"ladders", ladders},
          {"rules", rules},
          {"format_violation_token", world.format_violation_token},
          {"seed", world.seed}};
}

MockWorld load_mock_world(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kConfigError, "mock world is not JSON: " + path.string());
  return mock_world_from_json(j);
}

namespace {

// Lowest tier index present in `text`, which is the most specific one.
std::optional<std::size_t> present_tier(const MockLadder& ladder, std::string_view text) {
  for (std::size_t t = 0; t < ladder.tiers.size(); ++t) {
    if (text::icontains(text, ladder.tiers[t])) return t;
  }
  return std::nullopt;
}

bool inferable(const MockLadder& ladder, std::size_t tier) {
  return ladder.fixed || tier + 1 < ladder.tiers.size();
}

std::string last_user(std::span<const ChatTurn> turns) {
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->role == ChatRole::kUser) return it->content;
  }
  return {};
}

std::vector<std::string> token_set(std::string_view s) {
  auto tokens = text::word_tokens(s);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

std::uint64_t stable_hash(std::string_view s) {
  return std::stoull(sha256_hex(s).substr(0, 16), nullptr, 16);
}

}  // namespace

MockBackend::MockBackend(MockWorld world, const TemplateSet& templates)
    : world_(std::move(world)), templates_(templates) {
  digest_ = sha256_hex(to_json(world_).dump()).substr(0, 16);
}

std::string MockBackend::identity() const { return "mock:" + digest_; }

std::vector<AttributeGuess> MockBackend::infer(std::string_view text_in) const {
  std::map<AttributeKind, AttributeGuess> best;
  for (const auto& ladder : world_.ladders) {
    auto tier = present_tier(ladder, text_in);
    if (!tier || !inferable(ladder, *tier)) continue;
    const int certainty =
        ladder.fixed ? ladder.base_certainty
                     : std::max(1, ladder.base_certainty - static_cast<int>(*tier));
    auto it = best.find(ladder.kind);
    if (it != best.end() && it->second.certainty.value() >= certainty) continue;
    AttributeGuess g;
    g.kind = ladder.kind;
    g.rationale = "The text mentions \"" + ladder.tiers[*tier] + "\".";
    g.guesses = {ladder.value};
    g.certainty = CertaintyScore::clamped(certainty);
    best[ladder.kind] = std::move(g);
  }
  std::vector<AttributeGuess> out;
  for (auto k : prompt_order_kinds()) {
    if (auto it = best.find(k); it != best.end()) out.push_back(it->second);
  }
  return out;
}

std::string MockBackend::rewrite(std::string_view text_in,
                                 std::span<const AttributeKind> flagged) const {
  std::string out(text_in);
  for (const auto& ladder : world_.ladders) {
    if (ladder.fixed) continue;
    if (std::find(flagged.begin(), flagged.end(), ladder.kind) == flagged.end()) continue;
    auto tier = present_tier(ladder, out);
    if (!tier || *tier + 1 >= ladder.tiers.size()) continue;
    text::ireplace_all(out, ladder.tiers[*tier], ladder.tiers[*tier + 1]);
  }
  return out;
}

UtilityAssessment MockBackend::judge_utility(std::string_view original,
                                             std::string_view adapted) const {
  const auto orig = token_set(original);
  const auto adapt = token_set(adapted);
  std::vector<std::string> missing;
  std::set_difference(orig.begin(), orig.end(), adapt.begin(), adapt.end(),
                      std::back_inserter(missing));
  UtilityAssessment u;
  u.readability = {"The adapted text reads fluently.", 10};
  const int meaning = std::max(1, 10 - static_cast<int>(missing.size()) / 2);
  std::string why = "Both texts convey the same message.";
  if (missing.size() == 1) {
    why = "1 original word was replaced.";
  } else if (!missing.empty()) {
    why = std::to_string(missing.size()) + " original words were replaced.";
  }
  u.meaning = {why, meaning};
  u.hallucinations = {"No new information was added.", 1};
  return u;
}

std::string MockBackend::complete(std::span<const ChatTurn> turns, const GenerationParams&) {
  ++calls_;
  if (turns.empty()) throw Error(ErrorCode::kInvalidArgument, "no chat turns");
  const std::string user = last_user(turns);
  auto family = detect_family(turns, templates_);
  if (!family) throw Error(ErrorCode::kInvalidArgument, "mock backend cannot classify prompt");
  for (const auto& rule : world_.rules) {
    if (rule.family != *family) continue;
    bool all = std::all_of(rule.keywords.begin(), rule.keywords.end(),
                           [&](const std::string& k) { return text::icontains(user, k); });
    if (all) return rule.reply;
  }
  switch (*family) {
    case PromptFamily::kAnonymizer: return answer_anonymizer(user);
    case PromptFamily::kAdversary: return answer_adversary(user);
    case PromptFamily::kUtility: return answer_utility(user);
    case PromptFamily::kValidation: return answer_validation(user);
    case PromptFamily::kHardgen: return answer_hardgen(turns);
  }
  return {};
}

std::string MockBackend::answer_anonymizer(const std::string& user) const {
  const std::string& tpl = templates_.get(PromptFamily::kAnonymizer).user_text_with_slots;
  auto slots = match_template(tpl, user);
  if (!slots) slots = match_template(text::replace_all(tpl, "{{feedback}}\n\n", ""), user);
  if (!slots) throw Error(ErrorCode::kInvalidArgument, "mock cannot read anonymizer prompt");
  const std::string& comments = (*slots)["comments"];
  std::vector<AttributeKind> flagged;
  for (const auto& line : text::split((*slots)["feedback"], '\n')) {
    if (line.rfind("Type: ", 0) == 0) {
      if (auto k = parse_kind(text::trim(line.substr(6)))) flagged.push_back(*k);
    }
  }
  if (!world_.format_violation_token.empty() &&
      text::contains(comments, world_.format_violation_token)) {
    return "Sure, here is the anonymized text:\n" + comments;
  }
  return serialize_anonymizer_reply(rewrite(comments, flagged));
}

std::string MockBackend::answer_adversary(const std::string& user) const {
  auto slots = match_template(templates_.get(PromptFamily::kAdversary).user_text_with_slots, user);
  if (!slots) throw Error(ErrorCode::kInvalidArgument, "mock cannot read adversary prompt");
  std::vector<AttributeKind> kinds;
  for (const auto& name : text::split((*slots)["kind_list"], ',')) {
    if (auto k = parse_kind(text::trim(name))) kinds.push_back(*k);
  }
  const bool with_certainty = text::contains((*slots)["schema"], "\"certainty\"");
  auto guesses = infer((*slots)["text"]);
  return "Step-by-step reasoning follows the schema.\n" +
         serialize_adversary_reply(guesses, kinds, with_certainty);
}

std::string MockBackend::answer_utility(const std::string& user) const {
  auto slots = match_template(templates_.get(PromptFamily::kUtility).user_text_with_slots, user);
  if (!slots) throw Error(ErrorCode::kInvalidArgument, "mock cannot read utility prompt");
  return serialize_utility_reply(judge_utility((*slots)["original"], (*slots)["adapted"]));
}

std::string MockBackend::answer_validation(const std::string& user) const {
  auto slots =
      match_template(templates_.get(PromptFamily::kValidation).user_text_with_slots, user);
  if (!slots) throw Error(ErrorCode::kInvalidArgument, "mock cannot read validation prompt");
  std::vector<JudgeToken> tokens;
  for (const auto& line : text::split((*slots)["pairs"], '\n')) {
    auto bar = line.find(" | Prediction: ");
    if (line.rfind("Ground truth: ", 0) != 0 || bar == std::string::npos) continue;
    const auto truth = token_set(line.substr(14, bar - 14));
    const auto guess = token_set(line.substr(bar + 15));
    auto subset = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
      return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    if (truth == guess || (!truth.empty() && subset(truth, guess))) {
      tokens.push_back(JudgeToken::kYes);
    } else if (!guess.empty() && subset(guess, truth)) {
      tokens.push_back(JudgeToken::kLessPrecise);
    } else {
      tokens.push_back(JudgeToken::kNo);
    }
  }
  return serialize_validation_reply(tokens);
}

std::string MockBackend::answer_hardgen(std::span<const ChatTurn> turns) const {
  int count = 1;
  for (const auto& t : turns) {
    if (t.role != ChatRole::kSystem) continue;
    const std::string marker = "First, list ";
    auto at = t.content.find(marker);
    if (at != std::string::npos) count = std::max(1, std::atoi(t.content.c_str() + at + marker.size()));
  }
  const std::string user = last_user(turns);
  auto slots = match_template(templates_.get(PromptFamily::kHardgen).user_text_with_slots, user);
  if (!slots) throw Error(ErrorCode::kInvalidArgument, "mock cannot read hardgen prompt");
  static const char* const kSettings[] = {"commute", "workday", "weekend", "kitchen",
                                          "neighbourhood", "paperwork", "holiday", "colleagues"};
  std::mt19937_64 rng(world_.seed ^ stable_hash(user));
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kSettings) - 1);
  nlohmann::json topics = nlohmann::json::array();
  nlohmann::json texts = nlohmann::json::array();
  const std::string& occupation = (*slots)["occupation"];
  const std::string& place = (*slots)["current_place_of_living"];
  for (int i = 0; i < count; ++i) {
    const std::string setting = kSettings[pick(rng)];
    topics.push_back("The " + setting + " of a " + occupation + " in " + place);
    texts.push_back({{"plan", "Describe one " + setting + " detail only a " + occupation +
                                  " would notice."},
                     {"text", "Every " + setting + " I end up thinking about things only a " +
                                  occupation + " around " + place + " would know (" +
                                  std::to_string(i + 1) + ")."}});
  }
  return nlohmann::json{{"topics", topics}, {"texts", texts}}.dump();
}

}  // namespace anonkit
