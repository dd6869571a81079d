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

// Compares the rendered prompts against the reference listings kept under
// tests/fixtures/listings. Each check returns "" on a byte-exact match.

#include <functional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/jsonl.hpp"
#include "anonkit/protocol.hpp"
#include "anonkit/text_util.hpp"
#include "test_support.hpp"

namespace anonkit::testing {

inline std::string listing(const std::string& name) {
  return read_file(fixture("tests/fixtures/listings/" + name));
}

// Turns a Python-literal listing into JSON. Wrapped string lines are
// rejoined before the literal syntax is converted.
inline nlohmann::json python_literal_to_json(const std::string& src) {
  std::string out;
  bool in_string = false;
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    if (c == '"' && (i == 0 || src[i - 1] != '\\')) in_string = !in_string;
    if (in_string && c == '\n') {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      while (i + 1 < src.size() && src[i + 1] == ' ') ++i;
      out += ' ';
      continue;
    }
    out += c;
  }
  out = std::regex_replace(out, std::regex(R"(\bFalse\b)"), "false");
  out = std::regex_replace(out, std::regex(R"(\bTrue\b)"), "true");
  out = std::regex_replace(out, std::regex(R"(,(\s*[\]}]))"), "$1");
  return nlohmann::json::parse(out);
}

inline std::string join_turns(const std::vector<ChatTurn>& turns) {
  if (turns.size() != 2 || turns[0].role != ChatRole::kSystem || turns[1].role != ChatRole::kUser) {
    return "<unexpected turn layout>";
  }
  return turns[0].content + "\n\n" + turns[1].content;
}

inline std::string compare(const std::string& got, const std::string& want) {
  if (got == want) return {};
  std::size_t i = 0;
  while (i < got.size() && i < want.size() && got[i] == want[i]) ++i;
  return "differs at byte " + std::to_string(i);
}

inline std::string between(const std::string& s, const std::string& from, const std::string& to) {
  const auto a = s.find(from) + from.size();
  return s.substr(a, s.find(to, a) - a);
}

inline std::vector<std::pair<std::string, std::function<std::string()>>> listing_checks() {
  return {
      {"anonymization",
       [] {
         const std::string ref = listing("anonymization.txt");
         AttributeGuess g;
         g.kind = AttributeKind::kOccupation;
         g.rationale = between(ref, "Inference: ", "\n\nGuess: ");
         g.guesses = {"healthcare worker"};
         std::vector<AttributeGuess> fb{g};
         return compare(join_turns(render_anonymizer_prompt(
                            "healthcare sees slow shift - old stereotypes persist though!", fb)),
                        std::string(text::trim(ref)));
       }},
      {"adversary",
       [] {
         const std::string ref = listing("adversary.txt");
         std::vector<AttributeKind> kinds(prompt_order_kinds().begin(), prompt_order_kinds().end());
         return compare(
             join_turns(render_adversary_prompt(between(ref, "Text:\n\n", "\n\nOnly answer"), kinds)),
             std::string(text::trim(ref)));
       }},
      {"utility",
       [] {
         const std::string ref = listing("utility.txt");
         return compare(join_turns(render_utility_prompt(
                            between(ref, "Original text:\n\n", "\n\nAdapted text:"),
                            between(ref, "Adapted text:\n\n", "\n\nOnly answer"))),
                        std::string(text::trim(ref)));
       }},
      {"validation",
       [] {
         std::vector<ValidationPair> pairs{
             {normalize_attribute(AttributeKind::kLocation, "United States"), "usa"},
             {normalize_attribute(AttributeKind::kLocation, "Canada"), "Vancouver"}};
         std::string ref(text::trim(listing("validation.txt")));
         ref = text::replace_all(ref, "<pairs>",
                                 "Ground truth: United States | Prediction: usa\n"
                                 "Ground truth: Canada | Prediction: Vancouver");
         return compare(join_turns(render_validation_prompt(pairs)), ref);
       }},
      {"hardgen",
       [] {
         const auto& t = TemplateSet::builtin().get(PromptFamily::kHardgen);
         std::string mine = t.system_text + "\n\n" + t.user_text_with_slots;
         mine = std::regex_replace(mine, std::regex(R"(\{\{(\w+)\}\})"), "<$1>");
         return compare(mine, std::string(text::trim(listing("hardgen.txt"))));
       }},
      {"hardgen_schema",
       [] {
         const auto want = python_literal_to_json(listing("hardgen_schema.txt"));
         return hardgen_response_schema() == want ? std::string()
                                                  : "schema differs: " + hardgen_response_schema().dump();
       }},
  };
}

}  // namespace anonkit::testing
