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

#include "anonkit/protocol.hpp"

#include <cctype>

#include "anonkit/error.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

namespace {

constexpr std::array<PromptFamily, 5> kFamilies = {
    PromptFamily::kAnonymizer, PromptFamily::kAdversary, PromptFamily::kUtility,
    PromptFamily::kValidation, PromptFamily::kHardgen};

struct KindPrompt {
  AttributeKind kind;
  std::string_view subject;
  std::string_view guess;
};

// Per-kind schema lines of the adversary prompt.
constexpr std::array<KindPrompt, kAttributeKindCount> kKindPrompts = {{
    {AttributeKind::kLocation, "place of living",
     "<Your top 1 guess. If you are not sure, put null>"},
    {AttributeKind::kGender, "gender", "<Your top 1 guess. If you are not sure, put null>"},
    {AttributeKind::kAge, "age",
     "<Your top 1 guess. Use the age of the user when the user wrote the comment.\n"
     "                  Only give the number in string format. If you are not sure, put null>"},
    {AttributeKind::kOccupation, "occupation",
     "<Your top 1 guess. If you are not sure, put null>"},
    {AttributeKind::kPobp, "place of birth", "<Your top 1 guess. If you are not sure, put null>"},
    {AttributeKind::kMarried, "relationship status",
     "<Your top 1 guess. Choose from these options: No relation, In Relation,\n"
     "                  Married, Divorced. If you are not sure, put null>"},
    {AttributeKind::kIncome, "yearly income",
     "<Your top 1 guess. Choose from these options: No income, Low (<30k USD),\n"
     "                  Medium (30-60k USD), High (60-150k USD), Very High (>150k USD)>"},
    {AttributeKind::kEducation, "level of education",
     "<Your top 1 guess. Choose from these options: No Highschool, In Highschool,\n"
     "                  HS Diploma, In College, College Degree, PhD. If you are not sure, put "
     "null>"},
}};

const KindPrompt& kind_prompt(AttributeKind kind) {
  for (const auto& kp : kKindPrompts) {
    if (kp.kind == kind) return kp;
  }
  throw Error(ErrorCode::kInvalidArgument, "no prompt for kind");
}

std::vector<AttributeKind> in_prompt_order(std::span<const AttributeKind> kinds) {
  std::vector<AttributeKind> out;
  for (auto k : prompt_order_kinds()) {
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) out.push_back(k);
  }
  return out;
}

std::vector<ChatTurn> make_turns(const PromptTemplate& tpl,
                                 const std::map<std::string, std::string>& slots) {
  return {{ChatRole::kSystem, render_template(tpl.system_text, slots)},
          {ChatRole::kUser, render_template(tpl.user_text_with_slots, slots)}};
}

bool is_marker_line(std::string_view line) {
  return line.size() >= 2 && line[0] == '#' && (line[1] == ' ' || line[1] == '\t');
}

// Balanced-brace scan honoring string literals. Returns npos when the object
// never closes.
std::size_t object_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

std::optional<nlohmann::json> try_object_from(std::string_view s, std::size_t from) {
  auto open = s.find('{', from);
  if (open == std::string_view::npos) return std::nullopt;
  auto close = object_end(s, open);
  if (close == std::string_view::npos) return std::nullopt;
  auto parsed = nlohmann::json::parse(s.substr(open, close - open + 1), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

std::string guess_to_string(const nlohmann::json& v) {
  if (v.is_string()) return std::string(text::trim(v.get<std::string>()));
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return {};
}

int certainty_from_json(const nlohmann::json& v) {
  if (v.is_number()) return static_cast<int>(std::lround(v.get<double>()));
  if (v.is_string()) {
    if (auto n = parse_age(v.get<std::string>())) return static_cast<int>(std::lround(*n));
  }
  return CertaintyScore::kDefault;
}

}  // namespace

std::string_view role_name(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

ChatRole role_from_name(std::string_view name) {
  if (name == "system") return ChatRole::kSystem;
  if (name == "user") return ChatRole::kUser;
  if (name == "assistant") return ChatRole::kAssistant;
  throw Error(ErrorCode::kInvalidArgument, "unknown chat role '" + std::string(name) + "'");
}

std::string_view family_name(PromptFamily family) {
  switch (family) {
    case PromptFamily::kAnonymizer: return "anonymizer";
    case PromptFamily::kAdversary: return "adversary";
    case PromptFamily::kUtility: return "utility";
    case PromptFamily::kValidation: return "validation";
    case PromptFamily::kHardgen: return "hardgen";
  }
  return "?";
}

TemplateSet::TemplateSet(const std::map<std::string, std::string>& texts) {
  for (auto f : kFamilies) {
    const std::string base(family_name(f));
    auto sys = texts.find(base + ".system");
    auto usr = texts.find(base + ".user");
    if (sys == texts.end() || usr == texts.end()) {
      throw Error(ErrorCode::kConfigError, "missing template files for " + base);
    }
    templates_[f] = PromptTemplate{f, sys->second, usr->second};
  }
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set(builtin_template_texts());
  return set;
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> texts;
  for (auto f : kFamilies) {
    for (const char* part : {".system", ".user"}) {
      const std::string name = std::string(family_name(f)) + part;
      std::string content = read_file(dir / (name + ".txt"));
      if (!content.empty() && content.back() == '\n') content.pop_back();
      texts[name] = std::move(content);
    }
  }
  return TemplateSet(texts);
}

const PromptTemplate& TemplateSet::get(PromptFamily family) const { return templates_.at(family); }

std::map<std::string, std::string> TemplateSet::digests() const {
  std::map<std::string, std::string> out;
  for (const auto& [family, tpl] : templates_) {
    out[std::string(family_name(family))] =
        sha256_hex(tpl.system_text + "\n\n" + tpl.user_text_with_slots);
  }
  return out;
}

std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& slots) {
  auto lines = text::split(tpl, '\n');
  std::string out;
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    std::string_view t = text::trim(line);
    if (t.size() > 4 && t.substr(0, 2) == "{{" && t.substr(t.size() - 2) == "}}" &&
        t.find("{{", 2) == std::string_view::npos) {
      auto it = slots.find(std::string(t.substr(2, t.size() - 4)));
      if (it != slots.end() && it->second.empty()) {
        if (i + 1 < lines.size() && text::trim(lines[i + 1]).empty()) ++i;
        continue;
      }
    }
    std::string rendered;
    std::size_t pos = 0;
    while (true) {
      auto open = line.find("{{", pos);
      if (open == std::string::npos) {
        rendered.append(line, pos);
        break;
      }
      auto close = line.find("}}", open + 2);
      if (close == std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "unterminated slot marker in template");
      }
      const std::string name = line.substr(open + 2, close - open - 2);
      auto it = slots.find(name);
      if (it == slots.end()) {
        throw Error(ErrorCode::kInvalidArgument, "template slot '" + name + "' has no value");
      }
      rendered.append(line, pos, open - pos);
      rendered.append(it->second);
      pos = close + 2;
    }
    if (!first) out.push_back('\n');
    out.append(rendered);
    first = false;
  }
  return out;
}

std::vector<ChatTurn> render_anonymizer_prompt(std::string_view comments,
                                               std::span<const AttributeGuess> feedback,
                                               const AnonymizerPromptOptions& options,
                                               const TemplateSet& templates) {
  if (feedback.empty() && !options.allow_empty_feedback) {
    throw Error(ErrorCode::kEmptyFeedback, "anonymizer needs at least one inference");
  }
  std::vector<std::string> blocks;
  for (const auto& g : feedback) {
    blocks.push_back("Type: " + std::string(kind_name(g.kind)) + "\nInference: " + g.rationale +
                     "\n\nGuess: " + text::join(g.guesses, "; "));
  }
  if (options.utility) {
    const auto& u = *options.utility;
    blocks.push_back("Utility assessment of the current text:\nReadability: " +
                     std::to_string(u.readability.score) + " - " + u.readability.explanation +
                     "\nMeaning: " + std::to_string(u.meaning.score) + " - " +
                     u.meaning.explanation + "\nHallucinations: " +
                     std::to_string(u.hallucinations.score) + " - " +
                     u.hallucinations.explanation);
  }
  return make_turns(templates.get(PromptFamily::kAnonymizer),
                    {{"comments", std::string(comments)}, {"feedback", text::join(blocks, "\n\n")}});
}

std::string parse_anonymizer_reply(std::string_view reply) {
  std::size_t marker = std::string_view::npos;
  std::size_t line_start = 0;
  while (line_start <= reply.size()) {
    auto end = reply.find('\n', line_start);
    if (end == std::string_view::npos) end = reply.size();
    if (is_marker_line(reply.substr(line_start, end - line_start))) marker = line_start;
    line_start = end + 1;
  }
  if (marker == std::string_view::npos) {
    throw Error(ErrorCode::kFormatViolation, "anonymizer reply has no '# ' line");
  }
  return std::string(text::trim(reply.substr(marker + 2)));
}

std::vector<ChatTurn> render_adversary_prompt(std::string_view text_in,
                                              std::span<const AttributeKind> kinds,
                                              const AdversaryPromptOptions& options,
                                              const TemplateSet& templates) {
  auto ordered = in_prompt_order(kinds);
  if (ordered.empty()) throw Error(ErrorCode::kInvalidArgument, "no attribute kinds requested");
  std::vector<std::string> names;
  std::vector<std::string> blocks;
  for (auto k : ordered) {
    const auto& kp = kind_prompt(k);
    std::string guess(kp.guess);
    if (options.top_k > 1) {
      guess = text::replace_all(guess, "Your top 1 guess.",
                                "Your top " + std::to_string(options.top_k) +
                                    " guesses as a list, most likely first.");
    }
    std::string block = "    \"" + std::string(kind_name(k)) +
                        "\": {\n        \"reasoning\": <Your detailed reasoning for inferring the "
                        "user's " +
                        std::string(kp.subject) + ">,\n        \"guess\": " + guess;
    if (options.request_certainty) {
      block +=
          ",\n        \"certainty\": <Your certainty in the guess, from 1 (very uncertain) to 5 "
          "(very certain)>";
    }
    block += "\n    }";
    names.emplace_back(kind_name(k));
    blocks.push_back(std::move(block));
  }
  const std::string schema = "{\n" + text::join(blocks, ",\n") + "\n}";
  return make_turns(templates.get(PromptFamily::kAdversary),
                    {{"kind_list", text::join(names, ", ")},
                     {"schema", schema},
                     {"text", std::string(text_in)}});
}

std::vector<AttributeGuess> parse_adversary_reply(std::string_view reply,
                                                  std::span<const AttributeKind> kinds,
                                                  bool strict) {
  const nlohmann::json obj = extract_json_object(reply);
  std::vector<AttributeGuess> out;
  for (auto k : in_prompt_order(kinds)) {
    const std::string key(kind_name(k));
    if (!obj.contains(key) || !obj[key].is_object()) {
      if (strict) throw Error(ErrorCode::kMissingKind, key);
      continue;
    }
    const auto& e = obj[key];
    AttributeGuess g;
    g.kind = k;
    if (e.contains("reasoning") && e["reasoning"].is_string()) {
      g.rationale = e["reasoning"].get<std::string>();
    } else if (e.contains("inference") && e["inference"].is_string()) {
      g.rationale = e["inference"].get<std::string>();
    }
    if (e.contains("guess")) {
      const auto& gv = e["guess"];
      if (gv.is_array()) {
        for (const auto& item : gv) {
          auto s = guess_to_string(item);
          if (!s.empty() && g.guesses.size() < 3) g.guesses.push_back(std::move(s));
        }
      } else {
        auto s = guess_to_string(gv);
        if (!s.empty()) g.guesses.push_back(std::move(s));
      }
    }
    if (g.guesses.empty()) continue;
    g.certainty = CertaintyScore::clamped(
        e.contains("certainty") ? certainty_from_json(e["certainty"]) : CertaintyScore::kDefault);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<ChatTurn> render_utility_prompt(std::string_view original, std::string_view adapted,
                                            const TemplateSet& templates) {
  if (text::trim(original).empty() || text::trim(adapted).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "utility prompt needs two nonempty texts");
  }
  return make_turns(templates.get(PromptFamily::kUtility),
                    {{"original", std::string(original)}, {"adapted", std::string(adapted)}});
}

UtilityAssessment parse_utility_reply(std::string_view reply) {
  return utility_from_json(extract_json_object(reply));
}

std::string render_validation_pair(const ValidationPair& pair) {
  return "Ground truth: " + pair.truth.normalized + " | Prediction: " + pair.guess;
}

std::vector<ChatTurn> render_validation_prompt(std::span<const ValidationPair> pairs,
                                               const TemplateSet& templates) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no pairs to validate");
  std::vector<std::string> lines;
  for (const auto& p : pairs) lines.push_back(render_validation_pair(p));
  return make_turns(templates.get(PromptFamily::kValidation),
                    {{"pairs", text::join(lines, "\n")}});
}

std::vector<ChatTurn> render_hardgen_prompt(const HardgenPersona& persona, int count,
                                            const TemplateSet& templates) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "hardgen count must be >= 1");
  auto attr = [&](AttributeKind k) -> std::string {
    const AttributeValue* v = persona.profile.find(k);
    return v ? v->normalized : "unknown";
  };
  return make_turns(
      templates.get(PromptFamily::kHardgen),
      {{"count", std::to_string(count)},
       {"gender", attr(AttributeKind::kGender)},
       {"age", attr(AttributeKind::kAge)},
       {"occupation", attr(AttributeKind::kOccupation)},
       {"place_of_birth", attr(AttributeKind::kPobp)},
       {"yearly_income", attr(AttributeKind::kIncome)},
       {"level_of_education", attr(AttributeKind::kEducation)},
       {"current_place_of_living", attr(AttributeKind::kLocation)},
       {"relationship_status", attr(AttributeKind::kMarried)},
       {"writing_style", persona.writing_style.empty() ? "unknown" : persona.writing_style}});
}

const nlohmann::json& hardgen_response_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(R"JSON({
    "type": "object",
    "name": "generate_hard",
    "description": "Generate texts",
    "properties": {
        "topics": {
            "type": "array",
            "items": {
                "type": "string",
                "description": "Topic of experience or opinion that only people with the given persona can experience or think of"
            }
        },
        "texts": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "plan": {
                        "type": "string",
                        "description": "Plan how to write a short text (1 sentence)"
                    },
                    "text": {
                        "type": "string",
                        "description": "Write the text"
                    }
                },
                "required": ["plan", "text"],
                "additionalProperties": false
            }
        }
    },
    "required": ["topics", "texts"],
    "additionalProperties": false
})JSON");
  return schema;
}

std::string serialize_anonymizer_reply(std::string_view text_in) {
  return "# " + std::string(text_in);
}

std::string serialize_adversary_reply(std::span<const AttributeGuess> guesses,
                                      std::span<const AttributeKind> kinds, bool with_certainty) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (auto k : in_prompt_order(kinds)) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    auto it = std::find_if(guesses.begin(), guesses.end(),
                           [k](const AttributeGuess& g) { return g.kind == k; });
    if (it == guesses.end()) {
      e["reasoning"] = "There is not enough information in the text.";
      e["guess"] = nullptr;
    } else {
      e["reasoning"] = it->rationale;
      if (it->guesses.size() == 1) {
        e["guess"] = it->guesses.front();
      } else {
        e["guess"] = it->guesses;
      }
      if (with_certainty) e["certainty"] = it->certainty.value();
    }
    obj[std::string(kind_name(k))] = std::move(e);
  }
  return "# " + obj.dump(4);
}

std::string serialize_utility_reply(const UtilityAssessment& u) {
  nlohmann::ordered_json obj;
  auto one = [](const JudgedScore& s) {
    nlohmann::ordered_json e;
    e["explanation"] = s.explanation;
    e["score"] = s.score;
    return e;
  };
  obj["readability"] = one(u.readability);
  obj["meaning"] = one(u.meaning);
  obj["hallucinations"] = one(u.hallucinations);
  return "# " + obj.dump(4);
}

std::string serialize_validation_reply(std::span<const JudgeToken> tokens) {
  std::vector<std::string> parts;
  for (auto t : tokens) parts.emplace_back(judge_token_name(t));
  return text::join(parts, "; ");
}

std::optional<PromptFamily> detect_family(std::span<const ChatTurn> turns,
                                          const TemplateSet& templates) {
  for (const auto& turn : turns) {
    if (turn.role != ChatRole::kSystem) continue;
    for (auto f : kFamilies) {
      const auto& sys = templates.get(f).system_text;
      const auto prefix = sys.substr(0, std::min<std::size_t>(sys.size(), 60));
      if (turn.content.compare(0, prefix.size(), prefix) == 0) return f;
    }
  }
  return std::nullopt;
}

std::optional<std::map<std::string, std::string>> match_template(std::string_view tpl,
                                                                 std::string_view rendered) {
  std::vector<std::string> literals;
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (true) {
    auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) {
      literals.emplace_back(tpl.substr(pos));
      break;
    }
    auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) return std::nullopt;
    literals.emplace_back(tpl.substr(pos, open - pos));
    names.emplace_back(tpl.substr(open + 2, close - open - 2));
    pos = close + 2;
  }
  if (rendered.substr(0, literals.front().size()) != literals.front()) return std::nullopt;
  std::map<std::string, std::string> out;
  std::size_t at = literals.front().size();
  if (names.empty() && at != rendered.size()) return std::nullopt;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& next = literals[i + 1];
    std::size_t end;
    if (i + 1 == names.size()) {
      if (rendered.size() < at + next.size() ||
          rendered.substr(rendered.size() - next.size()) != next) {
        return std::nullopt;
      }
      end = rendered.size() - next.size();
    } else {
      end = next.empty() ? at : rendered.find(next, at);
      if (end == std::string_view::npos) return std::nullopt;
    }
    out[names[i]] = std::string(rendered.substr(at, end - at));
    at = end + next.size();
  }
  return out;
}

nlohmann::json extract_json_object(std::string_view reply) {
  std::size_t line_start = 0;
  while (line_start < reply.size()) {
    auto end = reply.find('\n', line_start);
    if (end == std::string_view::npos) end = reply.size();
    auto line = reply.substr(line_start, end - line_start);
    if (!line.empty() && line[0] == '#' && (line.size() == 1 || line[1] != '#')) {
      if (auto obj = try_object_from(reply, line_start + 1)) return *obj;
    }
    line_start = end + 1;
  }
  if (auto obj = try_object_from(reply, 0)) return *obj;
  throw Error(ErrorCode::kMalformedJson, "no complete JSON object in reply");
}

nlohmann::json to_json(const ChatTurn& turn) {
  return {{"role", role_name(turn.role)}, {"content", turn.content}};
}

ChatTurn turn_from_json(const nlohmann::json& j) {
  return {role_from_name(j.at("role").get<std::string>()), j.at("content").get<std::string>()};
}

}  // namespace anonkit
