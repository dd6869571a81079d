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

// Evaluates one case of tests/fixtures/replies/cases.json against the reply
// parsers. Returns an empty string on success, otherwise a description.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/error.hpp"
#include "anonkit/protocol.hpp"

namespace anonkit::testing {

inline std::string check_parser_case(const nlohmann::json& c) {
  const std::string family = c.at("family");
  const std::string reply = c.at("reply");
  const bool expects_error = c.contains("error");
  try {
    nlohmann::json got;
    if (family == "adversary") {
      std::vector<AttributeKind> kinds;
      for (const auto& k : c.at("kinds")) kinds.push_back(kind_from_name(k.get<std::string>()));
      got = nlohmann::json::array();
      for (const auto& g : parse_adversary_reply(reply, kinds, c.value("strict", false))) {
        got.push_back({{"type", kind_name(g.kind)},
                       {"guess", g.guesses},
                       {"certainty", g.certainty.value()}});
      }
    } else if (family == "anonymizer") {
      got = {{"text", parse_anonymizer_reply(reply)}};
    } else if (family == "utility") {
      auto u = parse_utility_reply(reply);
      got = {{"readability", u.readability.score},
             {"meaning", u.meaning.score},
             {"hallucinations", u.hallucinations.score}};
    } else if (family == "validation") {
      got = {{"tokens", nlohmann::json::array()}};
      for (auto t : parse_judge_tokens(reply)) got["tokens"].push_back(judge_token_name(t));
    } else {
      return "unknown family " + family;
    }
    if (expects_error) return "expected " + c["error"].get<std::string>() + ", got " + got.dump();
    if (got != c.at("expect")) return "expected " + c["expect"].dump() + ", got " + got.dump();
    return {};
  } catch (const Error& e) {
    if (expects_error && error_code_name(e.code()) == c["error"].get<std::string>()) return {};
    return std::string("unexpected error ") + e.what();
  }
}

}  // namespace anonkit::testing
