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

#include <cstdlib>
#include <map>
#include <sstream>

#include "anonkit/app.hpp"
#include "anonkit/jsonl.hpp"
#include "anonkit/text_util.hpp"
#include "test_support.hpp"

using namespace anonkit;
using namespace anonkit::testing;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

CliResult toy(const fs::path& out_dir, std::vector<std::string> args) {
  std::vector<std::string> full{"--config", fixture("fixtures/toy.cfg").string(), "--output-dir",
                                out_dir.string()};
  full.insert(full.end(), args.begin(), args.end());
  return cli(full);
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

void full_pipeline(const fs::path& dir) {
  for (const char* stage : {"synthesize", "build-datasets", "evaluate", "filter-hard", "hardgen"}) {
    auto r = toy(dir, {stage});
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
  }
}

nlohmann::json error_of(const CliResult& r) {
  return nlohmann::json::parse(text::trim(text::split(text::trim(r.err), '\n').back()));
}

}  // namespace

TEST(Cli, PipelineIsByteDeterministic) {
  TempDir a;
  TempDir b;
  full_pipeline(a.path());
  full_pipeline(b.path());
  const auto ta = tree(a.path());
  const auto tb = tree(b.path());
  EXPECT_EQ(ta.size(), tb.size());
  for (const auto& [name, content] : ta) {
    ASSERT_TRUE(tb.count(name)) << name;
    EXPECT_EQ(content, tb.at(name)) << name;
    EXPECT_FALSE(text::contains(content, a.path().string())) << name;
  }
  EXPECT_TRUE(ta.count("toy/synthesize/trajectories.jsonl"));
  EXPECT_TRUE(ta.count("toy/build-datasets/pref.jsonl"));
  EXPECT_TRUE(ta.count("toy/evaluate/report.txt"));
  EXPECT_TRUE(ta.count("toy/filter-hard/hard.jsonl"));
  EXPECT_TRUE(ta.count("toy/hardgen/generated.jsonl"));
  EXPECT_FALSE(ta.count("toy/synthesize/progress.jsonl"));
}

TEST(Cli, CompletedStagesAreSkipped) {
  TempDir dir;
  ASSERT_EQ(toy(dir.path(), {"synthesize"}).code, 0);
  const auto before = read_file(dir / "toy/synthesize/trajectories.jsonl");
  auto again = toy(dir.path(), {"synthesize"});
  EXPECT_EQ(again.code, 0);
  EXPECT_TRUE(text::contains(again.out, "already complete"));
  EXPECT_EQ(read_file(dir / "toy/synthesize/trajectories.jsonl"), before);
  EXPECT_EQ(parse_jsonl(before).size(), 20u);
}

TEST(Cli, UnknownRunsAreReported) {
  TempDir dir;
  auto r = toy(dir.path(), {"--run-id", "ghost", "build-datasets"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(error_of(r)["error"], "UnknownRun");
  auto rep = toy(dir.path(), {"export-report"});
  EXPECT_EQ(rep.code, 1);
  EXPECT_EQ(error_of(rep)["error"], "UnknownRun");
}

TEST(Cli, ConfigErrors) {
  TempDir dir;
  auto missing = cli({"--config", (dir / "nope.cfg").string(), "synthesize"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(error_of(missing)["error"], "ConfigError");

  write_file(dir / "bad.cfg", "{ not json");
  auto bad = cli({"--config", (dir / "bad.cfg").string(), "synthesize"});
  EXPECT_EQ(error_of(bad)["error"], "ConfigError");

  auto cfg = nlohmann::json::parse(read_file(fixture("fixtures/toy.cfg")));
  cfg["backends"]["roles"]["judge"] = "missing-preset";
  nlohmann::json paths = cfg["paths"];
  for (auto& [key, value] : paths.items()) {
    value = fixture("fixtures/" + value.get<std::string>()).string();
  }
  cfg["paths"] = paths;
  write_file(dir / "role.cfg", cfg.dump());
  auto role = cli({"--config", (dir / "role.cfg").string(), "--output-dir", dir.path().string(),
                   "synthesize"});
  EXPECT_EQ(role.code, 1);
  EXPECT_EQ(error_of(role)["error"], "ConfigError");
  EXPECT_TRUE(text::contains(error_of(role)["message"].get<std::string>(), "missing-preset"))
      << role.err;
}

TEST(Cli, SecretsStayOutOfArtifacts) {
  TempDir dir;
  ::setenv("ANONKIT_API_KEY", "sk-test-should-not-leak", 1);
  ASSERT_EQ(toy(dir.path(), {"synthesize"}).code, 0);
  for (const auto& [name, content] : tree(dir.path())) {
    EXPECT_FALSE(text::contains(content, "sk-test-should-not-leak")) << name;
  }
  const auto manifest = read_file(dir / "toy/synthesize/manifest.json");
  EXPECT_TRUE(text::contains(manifest, "ANONKIT_API_KEY"));
  ::unsetenv("ANONKIT_API_KEY");
}

TEST(Cli, CostTable) {
  auto r = cli({"cost", "--prices", fixture("fixtures/table7.csv").string(), "--base",
                "chatgpt-4o-latest"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* want : {"100.00%", "3.75%", "1.00%", "0.60%", "Llama-3.2-3B"}) {
    EXPECT_TRUE(text::contains(r.out, want)) << want;
  }
  auto unknown = cli({"cost", "--prices", fixture("fixtures/table7.csv").string(), "--base", "x"});
  EXPECT_EQ(error_of(unknown)["error"], "UnknownBase");
}

TEST(Cli, ValidateAttributes) {
  TempDir dir;
  write_file(dir / "in.jsonl",
             "{\"type\":\"age\",\"truth\":34,\"guess\":\"30-35\"}\n"
             "{\"type\":\"location\",\"truth\":\"Tokyo, Japan\",\"guess\":\"Japan\"}\n"
             "{\"type\":\"income\",\"truth\":\"high\",\"guess\":\"low\"}\n");
  auto r = toy(dir.path(), {"--mock", "validate-attrs", "--input", (dir / "in.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = parse_jsonl(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["score"], 1.0);
  EXPECT_EQ(rows[1]["score"], 0.5);
  EXPECT_EQ(rows[2]["score"], 0.0);
}

TEST(Cli, RefinePrintsTheReport) {
  TempDir dir;
  auto r = toy(dir.path(), {"refine", "--text", "I turned 30 last week.", "--iters", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["stop_reason"], "max_iters");
  EXPECT_EQ(j["iterations"].size(), 3u);
}

TEST(Cli, VersionAndUsage) {
  auto v = cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_TRUE(text::contains(v.out, kVersion));
  EXPECT_NE(cli({}).code, 0);
  EXPECT_NE(cli({"frobnicate"}).code, 0);
}
