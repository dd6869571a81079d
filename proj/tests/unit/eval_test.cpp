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

#include "anonkit/error.hpp"
#include "anonkit/eval.hpp"
#include "anonkit/text_util.hpp"
#include "test_support.hpp"

using namespace anonkit;
using namespace anonkit::testing;

namespace {

std::vector<CorpusItem> first_two() {
  auto items = load_corpus(fixture("fixtures/mock_corpus.jsonl").string()).items;
  items.resize(2);
  return items;
}

EvalReport report(double micro, double aggregate, const std::string& digest = "d") {
  EvalReport r;
  r.corpus_digest = digest;
  r.privacy.micro = micro;
  r.privacy.macro = micro;
  r.utility.aggregate = aggregate;
  return r;
}

}  // namespace

TEST(Eval, PrivacySummaryMicroAndMacro) {
  auto p = summarize_privacy({{AttributeKind::kAge, 1.0},
                              {AttributeKind::kAge, 0.0},
                              {AttributeKind::kAge, 0.0},
                              {AttributeKind::kIncome, 1.0}},
                             3);
  EXPECT_DOUBLE_EQ(p.micro, 0.5);
  EXPECT_DOUBLE_EQ(p.macro, (1.0 / 3.0 + 1.0) / 2.0);
  EXPECT_EQ(p.n_labeled_pairs, 4u);
  EXPECT_EQ(p.n_texts, 3u);
  EXPECT_EQ(p.per_attribute.at(AttributeKind::kAge).count, 3u);
  EXPECT_EQ(p.per_attribute.count(AttributeKind::kGender), 0u);
}

TEST(Eval, UtilitySummaryNormalizes) {
  auto u = summarize_utility({{{"r", 10}, {"m", 8}, {"h", 1}}, {{"r", 9}, {"m", 6}, {"h", 0}}});
  EXPECT_DOUBLE_EQ(u.readability, 0.95);
  EXPECT_DOUBLE_EQ(u.mean_meaning, 0.7);
  EXPECT_DOUBLE_EQ(u.hallucination, 0.5);
  EXPECT_DOUBLE_EQ(u.aggregate, (0.95 + 0.7 + 0.5) / 3.0);
  EXPECT_DOUBLE_EQ(utility_aggregate(0.934, 0.953, 1.0), (0.934 + 0.953 + 1.0) / 3.0);
  EXPECT_EQ(u.n_pairs, 2u);
}

TEST(Eval, MockPrivacyAndUtility) {
  auto mock = role(fixture_mock());
  auto items = first_two();
  auto p = evaluate_privacy(items, mock, mock, 2);
  // location and occupation are recovered, age and gender are left null
  EXPECT_DOUBLE_EQ(p.micro, 0.5);
  EXPECT_DOUBLE_EQ(p.per_attribute.at(AttributeKind::kLocation).mean(), 1.0);
  EXPECT_DOUBLE_EQ(p.per_attribute.at(AttributeKind::kAge).mean(), 0.0);
  EXPECT_TRUE(p.failures.empty());
  auto u = evaluate_utility({{items[0].text, items[0].text}, {items[1].text, items[1].text}}, mock);
  EXPECT_DOUBLE_EQ(u.aggregate, 1.0);
}

TEST(Eval, TextsFailIndividually) {
  auto mock = fixture_mock();
  auto picky = std::make_shared<FnBackend>([&](std::span<const ChatTurn> turns) -> std::string {
    if (text::contains(turns.back().content, "faulty code")) throw Error(ErrorCode::kTransportError, "slow");
    return mock->complete(turns, {});
  });
  auto p = evaluate_privacy(first_two(), role(picky), role(picky));
  ASSERT_EQ(p.failures.size(), 1u);
  EXPECT_EQ(p.failures[0].text_id, "t02");
  EXPECT_EQ(p.n_texts, 1u);
}

TEST(Eval, RenderedReportRows) {
  auto mock = role(fixture_mock());
  auto items = first_two();
  EvalReport before;
  before.label = "original";
  before.corpus_digest = corpus_digest(items);
  before.privacy = evaluate_privacy(items, mock, mock);
  before.utility = evaluate_utility({{items[0].text, items[0].text}}, mock);
  EvalReport after = before;
  after.label = "anon";
  after.privacy = summarize_privacy({{AttributeKind::kLocation, 0.0}, {AttributeKind::kAge, 0.0},
                                     {AttributeKind::kOccupation, 1.0}, {AttributeKind::kGender, 0.0}},
                                    2);
  after.utility.aggregate = 0.9;
  auto r = render_report(before, after);
  EXPECT_DOUBLE_EQ(r.overall, 0.5 - 0.1);
  const auto lines = text::split(r.text, '\n');
  ASSERT_GE(lines.size(), 16u);
  EXPECT_TRUE(text::contains(lines[0], "original"));
  EXPECT_TRUE(text::contains(lines[1], "Overall"));
  EXPECT_TRUE(text::contains(lines[1], "0.400"));
  EXPECT_TRUE(text::contains(r.text, "0.250"));
  EXPECT_EQ(r.json["attributes"]["location"]["anon"], 0.0);
  EXPECT_TRUE(r.json["attributes"]["income"]["anon"].is_null());
  auto back = eval_report_from_json(to_json(after));
  EXPECT_DOUBLE_EQ(back.privacy.micro, after.privacy.micro);
  EXPECT_EQ(back.privacy.per_attribute.size(), after.privacy.per_attribute.size());
}

TEST(Eval, ReportErrors) {
  EXPECT_THROW(render_report(report(0.5, 1.0, "a"), report(0.2, 1.0, "b")), Error);
  try {
    render_report(report(0.0, 1.0), report(0.0, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateBaseline);
  }
  try {
    render_report(report(0.5, 1.0, "a"), report(0.2, 1.0, "b"));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorpusMismatch);
  }
}

TEST(Eval, CorpusDigestCoversTruth) {
  auto a = first_two();
  auto b = a;
  EXPECT_EQ(corpus_digest(a), corpus_digest(b));
  b[0].truth = profile_from_json({{"location", "Tokyo, Japan"}, {"age", 35}}, "p01");
  EXPECT_NE(corpus_digest(a), corpus_digest(b));
}

TEST(Cost, PriceParsing) {
  EXPECT_EQ(parse_price("5.00"), 5'000'000);
  EXPECT_EQ(parse_price("$0.15"), 150'000);
  EXPECT_EQ(parse_price("0.000001"), 1);
  EXPECT_THROW(parse_price("0.0000001"), Error);
  EXPECT_THROW(parse_price("1.2.3"), Error);
  EXPECT_THROW(parse_price(""), Error);
  EXPECT_THROW(parse_price("-1"), Error);
}

TEST(Cost, RelativeToBase) {
  auto rows = load_price_table(fixture("fixtures/table7.csv"));
  auto cost = relative_cost(rows, "chatgpt-4o-latest");
  ASSERT_EQ(cost.size(), 5u);
  std::vector<std::string> pct;
  for (const auto& c : cost) pct.push_back(c.percent());
  EXPECT_EQ(pct, (std::vector<std::string>{"100.00%", "3.75%", "3.75%", "1.00%", "0.60%"}));
  EXPECT_EQ(cost[1].ratio_num, 3);
  EXPECT_EQ(cost[1].ratio_den, 80);
  EXPECT_EQ(cost[4].percent(1), "0.6%");
  try {
    relative_cost(rows, "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownBase);
  }
}

TEST(Cost, RoundsHalfUp) {
  CostEntry e;
  e.ratio_num = 1;
  e.ratio_den = 8;  // 12.5%
  EXPECT_EQ(e.percent(0), "13%");
  EXPECT_EQ(e.percent(1), "12.5%");
  e.ratio_num = 1;
  e.ratio_den = 3;
  EXPECT_EQ(e.percent(2), "33.33%");
}
