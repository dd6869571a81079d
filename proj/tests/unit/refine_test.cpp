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

#include "anonkit/refine.hpp"
#include "anonkit/scoring.hpp"
#include "anonkit/text_util.hpp"
#include "test_support.hpp"

using namespace anonkit;
using namespace anonkit::testing;

namespace {

const std::string kVending =
    "Moved here in spring and even vending machines are built into apartment walls here, which "
    "still surprises me.";

}  // namespace

TEST(Refine, StopsOnceNothingReachesTheThreshold) {
  auto report = self_refine(kVending, RefinePolicy{}, role(fixture_mock()));
  ASSERT_EQ(report.stop_reason, StopReason::kClean);
  // certainties 5, 4, 3, 2 down the location ladder
  ASSERT_EQ(report.iterations.size(), 4u);
  EXPECT_EQ(report.iterations[0].inferred[0].certainty.value(), 5);
  EXPECT_EQ(report.iterations[3].inferred[0].certainty.value(), 2);
  EXPECT_EQ(report.final_text, report.iterations.back().text);
  EXPECT_TRUE(text::contains(report.final_text, "machines can sometimes be found"));
  EXPECT_EQ(report.iterations.back().stop_reason, StopReason::kClean);
  EXPECT_FALSE(report.iterations[0].stop_reason.has_value());
  EXPECT_DOUBLE_EQ(utility_score(report.iterations[0].utility), 1.0);
}

TEST(Refine, CleanInputNeedsNoRewrite) {
  auto mock = fixture_mock();
  auto report = self_refine("I love rainy afternoons with a book.", RefinePolicy{}, role(mock));
  EXPECT_EQ(report.stop_reason, StopReason::kClean);
  EXPECT_EQ(report.iterations.size(), 1u);
  RefinePolicy only_age;
  only_age.kinds = {AttributeKind::kAge};
  auto narrow = self_refine(kVending, only_age, role(mock));
  EXPECT_EQ(narrow.iterations.size(), 1u);
  EXPECT_EQ(narrow.final_text, kVending);
}

TEST(Refine, RewriteBudget) {
  RefinePolicy p;
  p.max_iters = 1;
  auto report = self_refine(kVending, p, role(fixture_mock()));
  EXPECT_EQ(report.stop_reason, StopReason::kMaxIters);
  EXPECT_EQ(report.iterations.size(), 2u);
}

TEST(Refine, UtilityFloorKeepsThePreviousText) {
  RefinePolicy p;
  p.min_utility = 0.99;
  auto report = self_refine(kVending, p, role(fixture_mock()));
  EXPECT_EQ(report.stop_reason, StopReason::kUtilityFloor);
  ASSERT_EQ(report.iterations.size(), 1u);
  EXPECT_EQ(report.final_text, kVending);
  ASSERT_TRUE(report.rejected_candidate.has_value());
  EXPECT_LT(utility_score(report.rejected_candidate->utility), 0.99);
  EXPECT_NE(report.rejected_candidate->text, kVending);
  auto j = to_json(report);
  EXPECT_EQ(j["stop_reason"], "utility_floor");
  EXPECT_TRUE(j.contains("rejected_candidate"));
}

TEST(Refine, TwoUnchangedRewritesStall) {
  const std::string bairns = "Nothing beats the noise of wee bairns running around the garden.";
  auto report = self_refine(bairns, RefinePolicy{}, role(fixture_mock()));
  EXPECT_EQ(report.stop_reason, StopReason::kStalled);
  EXPECT_EQ(report.iterations.size(), 3u);
  EXPECT_EQ(report.final_text, bairns);
}

TEST(Refine, FailuresCarryThePartialReport) {
  auto mock = fixture_mock();
  int rewrites = 0;
  auto flaky = std::make_shared<FnBackend>([&](std::span<const ChatTurn> turns) -> std::string {
    if (detect_family(turns) == PromptFamily::kAnonymizer && ++rewrites == 2) {
      throw Error(ErrorCode::kTransportError, "slow");
    }
    return mock->complete(turns, {});
  });
  try {
    self_refine(kVending, RefinePolicy{}, role(flaky));
    FAIL();
  } catch (const RefineError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportError);
    EXPECT_EQ(e.partial().iterations.size(), 2u);
    EXPECT_EQ(e.partial().final_text, e.partial().iterations.back().text);
    EXPECT_FALSE(e.partial().stop_reason.has_value());
  }
}

TEST(Refine, PolicyValidation) {
  RefinePolicy p;
  p.min_utility = 1.5;
  EXPECT_THROW(p.check(), Error);
  p = RefinePolicy{};
  p.certainty_stop_threshold = 0;
  EXPECT_THROW(p.check(), Error);
  EXPECT_THROW(self_refine("   ", RefinePolicy{}, role(fixture_mock())), Error);
  p = RefinePolicy{};
  p.kinds = {AttributeKind::kIncome, AttributeKind::kPobp};
  p.max_iters = 2;
  auto back = refine_policy_from_json(to_json(p));
  EXPECT_EQ(back.kinds, p.kinds);
  EXPECT_EQ(back.max_iters, 2);
}
