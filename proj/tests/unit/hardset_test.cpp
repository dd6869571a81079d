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

#include <gtest/gtest.h>

#include <algorithm>

#include "anonkit/error.hpp"
#include "anonkit/hardset.hpp"
#include "anonkit/jsonl.hpp"
#include "test_support.hpp"

using namespace anonkit;
using namespace anonkit::testing;

namespace {

std::vector<std::string> ids(const std::vector<HardFilterRecord>& recs) {
  std::vector<std::string> out;
  for (const auto& r : recs) out.push_back(r.text_id);
  return out;
}

nlohmann::json reply_with(int n) {
  nlohmann::json r{{"topics", nlohmann::json::array()}, {"texts", nlohmann::json::array()}};
  for (int i = 0; i < n; ++i) {
    r["topics"].push_back("topic " + std::to_string(i));
    r["texts"].push_back({{"plan", "plan"}, {"text", "I knead dough before dawn " + std::to_string(i)}});
  }
  return r;
}

}  // namespace

TEST(HardFilter, KeepsExactlyThePlantedTexts) {
  auto corpus = load_corpus(fixture("fixtures/mock_corpus.jsonl").string()).items;
  HardFilterConfig cfg;
  cfg.parallelism = 4;
  auto res = filter_hard(corpus, cfg, same_backends(fixture_mock()));
  EXPECT_EQ(ids(res.hard), (std::vector<std::string>{"t11", "t12", "t13"}));
  ASSERT_EQ(res.failures.size(), 1u);
  EXPECT_EQ(res.failures[0].text_id, "t16");
  EXPECT_EQ(res.hard.size() + res.anonymized_ok.size() + res.failures.size(), corpus.size());
  auto ok = ids(res.anonymized_ok);
  for (const char* trap : {"t14", "t15", "t17", "t18"}) {
    EXPECT_NE(std::find(ok.begin(), ok.end(), trap), ok.end()) << trap;
  }
}

TEST(HardFilter, HardRecordsExplainThemselves) {
  auto corpus = load_corpus(fixture("fixtures/mock_corpus.jsonl").string()).items;
  auto t11 = *std::find_if(corpus.begin(), corpus.end(), [](auto& c) { return c.text_id == "t11"; });
  auto rec = filter_hard_one(t11, HardFilterConfig{}, same_backends(fixture_mock()));
  EXPECT_TRUE(rec.hard);
  ASSERT_TRUE(rec.round_of_failure.has_value());
  ASSERT_EQ(rec.residual.size(), 1u);
  EXPECT_EQ(rec.residual[0].kind, AttributeKind::kOccupation);
  EXPECT_GT(rec.residual[0].certainty.value(), 2);
  // the location clue is rewritten away while the occupation clue resists
  bool location_done = false;
  for (const auto& p : rec.progress) {
    if (p.kind == AttributeKind::kLocation) location_done = p.succeeded_in_round.has_value();
  }
  EXPECT_TRUE(location_done);
  EXPECT_EQ(to_json(rec)["hard"], true);
}

TEST(HardFilter, ConfigChecks) {
  HardFilterConfig cfg;
  cfg.max_rounds = 0;
  EXPECT_THROW(cfg.check(), Error);
  cfg = HardFilterConfig{};
  cfg.residual_threshold = 6;
  EXPECT_THROW(cfg.check(), Error);
  cfg = HardFilterConfig{};
  cfg.max_rounds = 2;
  EXPECT_EQ(hard_filter_config_from_json(to_json(cfg)).max_rounds, 2);
}

TEST(HardGen, ParsesWellFormedReplies) {
  auto rec = parse_hardgen_reply(reply_with(3), 3);
  EXPECT_EQ(rec.topics.size(), 3u);
  EXPECT_EQ(rec.texts[2].text, "I knead dough before dawn 2");
}

TEST(HardGen, RejectsSchemaViolations) {
  auto expect_violation = [](const nlohmann::json& j, int n) {
    try {
      parse_hardgen_reply(j, n);
      ADD_FAILURE() << j.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation) << j.dump();
    }
  };
  expect_violation(reply_with(2), 3);
  expect_violation(nlohmann::json::array(), 1);
  auto extra = reply_with(1);
  extra["notes"] = "x";
  expect_violation(extra, 1);
  auto third = reply_with(1);
  third["texts"][0]["text"] = "The bakery opens early and the bread is warm.";
  expect_violation(third, 1);
  auto blank = reply_with(1);
  blank["topics"][0] = "  ";
  expect_violation(blank, 1);
  auto missing = reply_with(1);
  missing["texts"][0].erase("plan");
  expect_violation(missing, 1);
}

TEST(HardGen, MockGeneratesValidatedTexts) {
  auto lines = parse_jsonl(read_file(fixture("fixtures/profiles.jsonl")));
  HardgenPersona persona;
  persona.profile = profile_from_json(lines[0]["truth"], "g01");
  persona.writing_style = lines[0]["writing_style"];
  auto mock = role(fixture_mock());
  auto a = generate_hard(persona, 4, mock);
  auto b = generate_hard(persona, 4, mock);
  EXPECT_EQ(a.profile_id, "g01");
  ASSERT_EQ(a.texts.size(), 4u);
  EXPECT_EQ(a.texts, b.texts);
  EXPECT_THROW(generate_hard(persona, 0, mock), Error);
}
