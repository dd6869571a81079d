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

// Scripted backend replaying the three-step "skill over stereotype"
// trajectory from tests/fixtures/trajectory_skill.json.

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "anonkit/jsonl.hpp"
#include "anonkit/protocol.hpp"
#include "anonkit/text_util.hpp"
#include "test_support.hpp"

namespace anonkit::testing {

inline nlohmann::json skill_fixture() {
  return nlohmann::json::parse(read_file(fixture("tests/fixtures/trajectory_skill.json")));
}

inline CorpusItem skill_item(const nlohmann::json& fx) {
  CorpusItem item;
  item.text_id = fx["text_id"];
  item.profile_id = fx["profile_id"];
  item.text = fx["steps"][0]["text"];
  item.truth = profile_from_json(fx["truth"], item.profile_id);
  return item;
}

inline std::shared_ptr<FnBackend> skill_backend(const nlohmann::json& fx) {
  return std::make_shared<FnBackend>([fx](std::span<const ChatTurn> turns) -> std::string {
    const auto& steps = fx["steps"];
    const std::string user = turns.back().content;
    auto step_in = [&](const std::string& haystack) -> int {
      for (int i = static_cast<int>(steps.size()) - 1; i >= 0; --i) {
        if (text::contains(haystack, steps[i]["text"].get<std::string>())) return i;
      }
      return -1;
    };
    switch (detect_family(turns).value()) {
      case PromptFamily::kAdversary: {
        const int i = step_in(user.substr(user.rfind("Text:")));
        return "Reasoning.\n# " + nlohmann::json{{"occupation", steps[i]["occupation"]}}.dump(4);
      }
      case PromptFamily::kAnonymizer: {
        const int i = step_in(user);
        return "# " + steps[i + 1]["text"].get<std::string>();
      }
      case PromptFamily::kUtility: {
        const int i = step_in(user.substr(user.find("Adapted text:")));
        const auto& u = steps[i]["utility"];
        nlohmann::json j;
        for (const char* k : {"readability", "meaning", "hallucinations"}) {
          j[k] = {{"explanation", "scripted"}, {"score", u[k]}};
        }
        return "# " + j.dump();
      }
      case PromptFamily::kValidation: {
        std::vector<std::string> out;
        for (const auto& line : text::split(user, '\n')) {
          auto bar = line.find(" | Prediction: ");
          if (bar == std::string::npos) continue;
          const auto guess = text::to_lower(line.substr(bar + 15));
          bool ok = false;
          for (const auto& a : fx["accepted_guesses"]) ok = ok || guess == a.get<std::string>();
          out.push_back(ok ? "yes" : "no");
        }
        return text::join(out, "; ");
      }
      case PromptFamily::kHardgen: break;
    }
    return {};
  }, "scripted:skill");
}

}  // namespace anonkit::testing
