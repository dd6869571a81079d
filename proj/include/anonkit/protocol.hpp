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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/scoring.hpp"
#include "anonkit/taxonomy.hpp"

namespace anonkit {

enum class ChatRole { kSystem, kUser, kAssistant };

std::string_view role_name(ChatRole role);
ChatRole role_from_name(std::string_view name);

struct ChatTurn {
  ChatRole role = ChatRole::kUser;
  std::string content;

  bool operator==(const ChatTurn&) const = default;
};

enum class PromptFamily { kAnonymizer, kAdversary, kUtility, kValidation, kHardgen };

std::string_view family_name(PromptFamily family);

struct PromptTemplate {
  PromptFamily family = PromptFamily::kAnonymizer;
  std::string system_text;
  std::string user_text_with_slots;
};

// Templates as `<family>.system.txt` / `<family>.user.txt` files with
// `{{slot}}` markers.
class TemplateSet {
 public:
  static const TemplateSet& builtin();
  static TemplateSet load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(PromptFamily family) const;
  // sha256 of system + "\n\n" + user, keyed by family name.
  std::map<std::string, std::string> digests() const;

 private:
  explicit TemplateSet(const std::map<std::string, std::string>& texts);
  std::map<PromptFamily, PromptTemplate> templates_;
};

// Generated at build time from templates/.
const std::map<std::string, std::string>& builtin_template_texts();

// Fills every `{{name}}`. A slot that stands alone on its line and receives
// an empty value is removed together with the blank line after it. Throws
// kInvalidArgument when a marker has no value.
std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& slots);

struct AnonymizerPromptOptions {
  // Appended after the inference blocks when set (self-refinement).
  const UtilityAssessment* utility = nullptr;
  // Permits rendering without inference blocks (SFT export without
  // adversarial feedback).
  bool allow_empty_feedback = false;
};

std::vector<ChatTurn> render_anonymizer_prompt(std::string_view comments,
                                               std::span<const AttributeGuess> feedback,
                                               const AnonymizerPromptOptions& options = {},
                                               const TemplateSet& templates = TemplateSet::builtin());

// Text after the last line-initial "# " marker, trimmed. Throws
// kFormatViolation when the reply has no such line.
std::string parse_anonymizer_reply(std::string_view reply);

struct AdversaryPromptOptions {
  bool request_certainty = false;  // adds a 1..5 "certainty" field per kind
  int top_k = 1;                   // >1 asks for a ranked list
};

std::vector<ChatTurn> render_adversary_prompt(std::string_view text,
                                              std::span<const AttributeKind> kinds,
                                              const AdversaryPromptOptions& options = {},
                                              const TemplateSet& templates = TemplateSet::builtin());

// Null guesses are omitted; missing certainty defaults to 3. Throws
// kMalformedJson, and kMissingKind in strict mode.
std::vector<AttributeGuess> parse_adversary_reply(std::string_view reply,
                                                  std::span<const AttributeKind> kinds,
                                                  bool strict = false);

std::vector<ChatTurn> render_utility_prompt(std::string_view original, std::string_view adapted,
                                            const TemplateSet& templates = TemplateSet::builtin());
UtilityAssessment parse_utility_reply(std::string_view reply);

std::string render_validation_pair(const ValidationPair& pair);
std::vector<ChatTurn> render_validation_prompt(std::span<const ValidationPair> pairs,
                                               const TemplateSet& templates = TemplateSet::builtin());

struct HardgenPersona {
  GroundTruthProfile profile;
  std::string writing_style;
};

std::vector<ChatTurn> render_hardgen_prompt(const HardgenPersona& persona, int count,
                                            const TemplateSet& templates = TemplateSet::builtin());
// Structured-output schema sent with hardgen requests.
const nlohmann::json& hardgen_response_schema();

// Serializers producing replies in the formats the parsers accept.
std::string serialize_anonymizer_reply(std::string_view text);
std::string serialize_adversary_reply(std::span<const AttributeGuess> guesses,
                                      std::span<const AttributeKind> kinds, bool with_certainty);
std::string serialize_utility_reply(const UtilityAssessment& u);
std::string serialize_validation_reply(std::span<const JudgeToken> tokens);

std::optional<PromptFamily> detect_family(std::span<const ChatTurn> turns,
                                          const TemplateSet& templates = TemplateSet::builtin());

// Inverse of render_template for mock backends: recovers slot values from a
// rendered text. Each value extends to the first occurrence of the literal
// that follows it, and the last slot extends to the final literal suffix.
// Returns nullopt when the literals do not line up.
std::optional<std::map<std::string, std::string>> match_template(std::string_view tpl,
                                                                 std::string_view rendered);

// First JSON object at or after a line-initial "#" marker, tolerating prose
// and code fences; falls back to the first object in the reply.
nlohmann::json extract_json_object(std::string_view reply);

nlohmann::json to_json(const ChatTurn& turn);
ChatTurn turn_from_json(const nlohmann::json& j);

}  // namespace anonkit
