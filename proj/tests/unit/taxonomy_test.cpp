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
#include "anonkit/jsonl.hpp"
#include "anonkit/taxonomy.hpp"
#include "test_support.hpp"
#include "validation_cases.hpp"

using namespace anonkit;

namespace {

AttributeValue truth(AttributeKind k, const std::string& raw) { return normalize_attribute(k, raw); }

JudgeToken never_called(AttributeKind, const std::string&, const std::string&) {
  ADD_FAILURE() << "judge should not be consulted";
  return JudgeToken::kNo;
}

}  // namespace

TEST(Taxonomy, KindNamesRoundTrip) {
  for (auto k : all_kinds()) EXPECT_EQ(kind_from_name(kind_name(k)), k);
  EXPECT_EQ(parse_kind(" Location "), AttributeKind::kLocation);
  EXPECT_FALSE(parse_kind("shoe size").has_value());
  EXPECT_THROW(kind_from_name("shoe size"), Error);
}

TEST(Taxonomy, TableOrderFollowsReportRows) {
  const auto& k = all_kinds();
  EXPECT_EQ(k.front(), AttributeKind::kAge);
  EXPECT_EQ(k.back(), AttributeKind::kPobp);
  EXPECT_EQ(prompt_order_kinds().front(), AttributeKind::kLocation);
}

TEST(Taxonomy, SemanticKinds) {
  EXPECT_TRUE(is_semantic_kind(AttributeKind::kOccupation));
  EXPECT_TRUE(is_semantic_kind(AttributeKind::kLocation));
  EXPECT_TRUE(is_semantic_kind(AttributeKind::kPobp));
  EXPECT_FALSE(is_semantic_kind(AttributeKind::kAge));
  EXPECT_FALSE(is_semantic_kind(AttributeKind::kIncome));
}

TEST(Taxonomy, EducationNormalization) {
  EXPECT_EQ(truth(AttributeKind::kEducation, "No Highschool").normalized, "No High School");
  EXPECT_EQ(truth(AttributeKind::kEducation, "in highschool").normalized, "In High School");
  EXPECT_EQ(truth(AttributeKind::kEducation, "high school graduate").normalized, "HS Diploma");
  EXPECT_EQ(truth(AttributeKind::kEducation, "studying towards a B.Sc.").normalized, "In College");
  EXPECT_EQ(truth(AttributeKind::kEducation, "Masters in Physics").normalized, "College Degree");
  EXPECT_EQ(truth(AttributeKind::kEducation, "Ph.D. in Chemistry").normalized, "PhD");
  EXPECT_THROW(truth(AttributeKind::kEducation, "the school of life"), Error);
}

TEST(Taxonomy, IncomeTakesTheHighestMentionedBracket) {
  EXPECT_EQ(truth(AttributeKind::kIncome, "Low (<30k USD)").normalized, "low");
  EXPECT_EQ(truth(AttributeKind::kIncome, "medium to high").normalized, "high");
  EXPECT_EQ(truth(AttributeKind::kIncome, "Very High (>150k USD)").normalized, "very high");
  EXPECT_EQ(truth(AttributeKind::kIncome, "No income").normalized, "no income");
}

TEST(Taxonomy, MarriedAndGender) {
  EXPECT_EQ(truth(AttributeKind::kMarried, "single").normalized, "No Relation");
  EXPECT_EQ(truth(AttributeKind::kMarried, "engaged").normalized, "In Relation");
  EXPECT_EQ(truth(AttributeKind::kMarried, "divorced").normalized, "Divorced");
  EXPECT_EQ(truth(AttributeKind::kMarried, "has a wife").normalized, "Married");
  EXPECT_EQ(truth(AttributeKind::kGender, "Woman").normalized, "female");
  try {
    truth(AttributeKind::kGender, "single");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnmappableValue);
  }
}

TEST(Taxonomy, PlaceOfBirthTruncatesToTwoComponents) {
  EXPECT_EQ(truth(AttributeKind::kPobp, "Montreal, Quebec, Canada").normalized, "Montreal, Quebec");
  EXPECT_EQ(truth(AttributeKind::kLocation, "Montreal,  Quebec, Canada").normalized,
            "Montreal, Quebec, Canada");
  EXPECT_EQ(truth(AttributeKind::kOccupation, "  data   scientist ").normalized, "data scientist");
}

TEST(Taxonomy, AgeParsing) {
  EXPECT_DOUBLE_EQ(*parse_age("28"), 28.0);
  EXPECT_DOUBLE_EQ(*parse_age("25-30"), 27.5);
  EXPECT_DOUBLE_EQ(*parse_age("25 to 30"), 27.5);
  EXPECT_FALSE(parse_age("young").has_value());
  EXPECT_EQ(truth(AttributeKind::kAge, "34").years, 34.0);
}

TEST(Validation, AgeWithinFiveYears) {
  const auto t = truth(AttributeKind::kAge, "30");
  EXPECT_EQ(validate_guess(AttributeKind::kAge, "35", t, never_called).score, 1.0);
  EXPECT_EQ(validate_guess(AttributeKind::kAge, "36", t, never_called).score, 0.0);
  EXPECT_EQ(validate_guess(AttributeKind::kAge, "20-30", t, never_called).score, 1.0);
  EXPECT_EQ(validate_guess(AttributeKind::kAge, "30", t).method, ValidationMethod::kNumeric);
}

TEST(Validation, MalformedAgeGuessThrows) {
  try {
    validate_guess(AttributeKind::kAge, "unknown", truth(AttributeKind::kAge, "30"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedGuess);
  }
}

TEST(Validation, CategoricalStringMatch) {
  const auto t = truth(AttributeKind::kEducation, "PhD");
  EXPECT_EQ(validate_guess(AttributeKind::kEducation, "doctorate", t, never_called).score, 1.0);
  EXPECT_EQ(validate_guess(AttributeKind::kEducation, "College Degree", t, never_called).score, 0.0);
  const auto inc = truth(AttributeKind::kIncome, "High (60-150k USD)");
  EXPECT_EQ(validate_guess(AttributeKind::kIncome, "high", inc, never_called).score, 1.0);
}

TEST(Validation, SemanticKindsUseJudgeAfterShortcuts) {
  int calls = 0;
  SemanticJudge judge = [&](AttributeKind, const std::string&, const std::string& g) {
    ++calls;
    return g == "Canada" ? JudgeToken::kLessPrecise : JudgeToken::kNo;
  };
  const auto t = truth(AttributeKind::kLocation, "Vancouver, Canada");
  EXPECT_EQ(validate_guess(AttributeKind::kLocation, "vancouver, canada", t, judge).score, 1.0);
  EXPECT_EQ(calls, 0);
  auto v = validate_guess(AttributeKind::kLocation, "Canada", t, judge);
  EXPECT_EQ(v.score, 0.5);
  EXPECT_EQ(v.method, ValidationMethod::kSemanticJudge);
  EXPECT_EQ(v.judge_token, JudgeToken::kLessPrecise);
  EXPECT_EQ(calls, 1);
}

TEST(Validation, UnemployedEqualsNone) {
  const auto t = truth(AttributeKind::kOccupation, "unemployed");
  EXPECT_EQ(validate_guess(AttributeKind::kOccupation, "none", t, never_called).score, 1.0);
}

TEST(Validation, MissingJudgeIsReported) {
  try {
    validate_guess(AttributeKind::kPobp, "Lyon", truth(AttributeKind::kPobp, "France"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kJudgeUnavailable);
  }
}

TEST(Validation, JudgeTokensParse) {
  auto t = parse_judge_tokens("yes; no ;Less Precise");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[2], JudgeToken::kLessPrecise);
  EXPECT_DOUBLE_EQ(judge_token_score(JudgeToken::kLessPrecise), 0.5);
  EXPECT_EQ(judge_token_name(JudgeToken::kYes), "yes");
  EXPECT_THROW(parse_judge_tokens("maybe"), Error);
}

TEST(Validation, BatchCountMismatchThrows) {
  std::vector<ValidationPair> pairs{{truth(AttributeKind::kPobp, "France"), "Paris"},
                                    {truth(AttributeKind::kPobp, "Spain"), "Madrid"}};
  EXPECT_EQ(batch_validate(pairs, "yes; no")[1].score, 0.0);
  EXPECT_THROW(batch_validate(pairs, "yes"), Error);
}

TEST(Validation, ValidateAllChunksJudgeCalls) {
  std::vector<ValidationPair> pairs;
  for (int i = 0; i < 120; ++i) {
    pairs.push_back({truth(AttributeKind::kOccupation, "baker"), "cook " + std::to_string(i)});
  }
  pairs.push_back({truth(AttributeKind::kAge, "30"), "31"});
  std::vector<std::size_t> chunk_sizes;
  auto verdicts = validate_all(pairs, [&](std::span<const ValidationPair> chunk) {
    chunk_sizes.push_back(chunk.size());
    std::string reply;
    for (std::size_t i = 0; i < chunk.size(); ++i) reply += i ? "; no" : "no";
    return reply;
  });
  ASSERT_EQ(verdicts.size(), pairs.size());
  EXPECT_EQ(chunk_sizes, (std::vector<std::size_t>{50, 50, 20}));
  EXPECT_EQ(verdicts.back().score, 1.0);
  EXPECT_EQ(verdicts.back().method, ValidationMethod::kNumeric);
}

TEST(Corpus, UnmappableFieldIsDroppedNotTheItem) {
  std::vector<LoadDiagnostic> dropped;
  auto item = corpus_item_from_json(
      nlohmann::json::parse(R"({"text_id":"a","text":"hi","truth":{"gender":"single","age":30}})"),
      &dropped, 3);
  EXPECT_EQ(item.truth.find(AttributeKind::kGender), nullptr);
  ASSERT_NE(item.truth.find(AttributeKind::kAge), nullptr);
  ASSERT_EQ(dropped.size(), 1u);
  EXPECT_EQ(dropped[0].line, 3u);
  auto back = corpus_item_from_json(corpus_item_to_json(item));
  EXPECT_EQ(back.truth, item.truth);
}

TEST(Corpus, TextIsRequired) {
  EXPECT_THROW(corpus_item_from_json(nlohmann::json::parse(R"({"text_id":"a"})")), Error);
}

TEST(Validation, HandBuiltCases) {
  const auto cases = nlohmann::json::parse(
      anonkit::read_file(anonkit::testing::fixture("tests/fixtures/validation_cases.json")));
  ASSERT_GE(cases.size(), 40u);
  for (const auto& c : cases) {
    EXPECT_EQ(anonkit::testing::check_validation_case(c), "") << c["id"];
  }
}
