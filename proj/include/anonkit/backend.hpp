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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/protocol.hpp"

namespace anonkit {

struct GenerationParams {
  double temperature = 0.1;
  double top_p = 1.0;
  std::optional<int> max_tokens;
  std::string model_name;
  // Sent verbatim as the request's response_format (structured output).
  std::optional<nlohmann::json> response_format;

  void check() const;  // throws kInvalidArgument
  bool operator==(const GenerationParams&) const = default;
};

nlohmann::json to_json(const GenerationParams& p);
GenerationParams params_from_json(const nlohmann::json& j);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Returns the assistant text. Safe for concurrent use.
  virtual std::string complete(std::span<const ChatTurn> turns, const GenerationParams& params) = 0;
  // Stable description recorded in run manifests. Never contains secrets.
  virtual std::string identity() const = 0;
};

// sha256 over the canonical JSON of {scope, turns, params}. `scope` separates
// backends that share a model name.
std::string cache_key(std::span<const ChatTurn> turns, const GenerationParams& params,
                      std::string_view scope = {});

using SteadyClock = std::chrono::steady_clock;
using ClockFn = std::function<SteadyClock::time_point()>;
using SleepFn = std::function<void(SteadyClock::duration)>;

struct RateLimit {
  int requests = 0;  // 0 disables limiting
  std::chrono::milliseconds interval{1000};
};

// Token bucket holding at most `requests` tokens, refilled continuously at
// requests/interval. A caller that finds the bucket empty reserves the next
// token before sleeping, so waiting callers are served in arrival order.
class RateLimiter {
 public:
  explicit RateLimiter(RateLimit limit, ClockFn clock = SteadyClock::now,
                       SleepFn sleep = nullptr);

  // Blocks until a request may be sent. Returns the time the slot opens.
  SteadyClock::time_point acquire();

 private:
  RateLimit limit_;
  ClockFn clock_;
  SleepFn sleep_;
  std::mutex mu_;
  double tokens_;
  SteadyClock::time_point last_;
};

// Append-only JSONL file of {key, params, reply, timestamp}.
class ResponseCache {
 public:
  // Loads existing entries; a truncated final line is ignored.
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key, const nlohmann::json& params) const;
  void insert(const std::string& key, const nlohmann::json& params, const std::string& reply);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  struct Entry {
    nlohmann::json params;
    std::string reply;
  };
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

class CachedBackend : public ChatBackend {
 public:
  CachedBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<ResponseCache> cache);

  std::string complete(std::span<const ChatTurn> turns, const GenerationParams& params) override;
  std::string identity() const override { return inner_->identity(); }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

struct BackendConfig {
  std::string endpoint_url;  // e.g. https://api.example.com/v1/chat/completions
  std::string auth_token_env_name;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  RateLimit rate_limit;
  std::optional<std::filesystem::path> cache_path;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{30000};

  void check() const;  // throws kConfigError
};

// Chat-completions client over HTTP(S). Retries transport failures, 429 and
// 5xx with exponential backoff.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config, SleepFn sleep = nullptr,
                           std::shared_ptr<RateLimiter> limiter = nullptr);

  std::string complete(std::span<const ChatTurn> turns, const GenerationParams& params) override;
  std::string identity() const override;

  std::size_t attempts() const { return attempts_; }

 private:
  BackendConfig config_;
  SleepFn sleep_;
  std::shared_ptr<RateLimiter> limiter_;
  std::string scheme_host_port_;
  std::string path_;
  std::atomic<std::size_t> attempts_{0};
};

// One keyword ladder of the mock world. While the text contains tiers[t] and
// t is not the last tier, the adversary infers `value` for `kind` with
// certainty max(1, base_certainty - t). The anonymizer moves a flagged ladder
// one tier up. Fixed ladders are never rewritten.
struct MockLadder {
  std::string id;
  AttributeKind kind = AttributeKind::kLocation;
  std::string value;
  std::vector<std::string> tiers;
  int base_certainty = 5;
  bool fixed = false;
};

// Literal reply for prompts of `family` whose last user turn contains every
// keyword (case-insensitive). The first matching rule wins.
struct ScriptedRule {
  PromptFamily family = PromptFamily::kAnonymizer;
  std::vector<std::string> keywords;
  std::string reply;
};

struct MockWorld {
  std::vector<MockLadder> ladders;
  std::vector<ScriptedRule> rules;
  // Anonymizer replies without the '# ' marker when the text contains this.
  std::string format_violation_token = "[[no-marker]]";
  std::uint64_t seed = 0;
};

MockWorld mock_world_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockWorld& world);
MockWorld load_mock_world(const std::filesystem::path& path);

// Deterministic backend answering every prompt family from a MockWorld.
// Scripted rules are consulted first; the ladder behaviour is the fallback.
class MockBackend : public ChatBackend {
 public:
  explicit MockBackend(MockWorld world, const TemplateSet& templates = TemplateSet::builtin());

  std::string complete(std::span<const ChatTurn> turns, const GenerationParams& params) override;
  std::string identity() const override;

  std::size_t calls() const { return calls_; }
  const MockWorld& world() const { return world_; }

  // Ladder inference on a bare text, in prompt order; exposed for oracles.
  std::vector<AttributeGuess> infer(std::string_view text) const;
  // One anonymizer rewrite of `text` for the flagged kinds.
  std::string rewrite(std::string_view text, std::span<const AttributeKind> flagged) const;
  UtilityAssessment judge_utility(std::string_view original, std::string_view adapted) const;

 private:
  std::string answer_anonymizer(const std::string& user) const;
  std::string answer_adversary(const std::string& user) const;
  std::string answer_utility(const std::string& user) const;
  std::string answer_validation(const std::string& user) const;
  std::string answer_hardgen(std::span<const ChatTurn> turns) const;

  MockWorld world_;
  const TemplateSet& templates_;
  std::string digest_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace anonkit
