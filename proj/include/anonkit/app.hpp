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
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anonkit/backend.hpp"
#include "anonkit/dataset.hpp"
#include "anonkit/engine.hpp"
#include "anonkit/hardset.hpp"
#include "anonkit/refine.hpp"

namespace anonkit {

inline constexpr const char* kVersion = "0.1.0";

// A named backend definition. type "http" uses the endpoint fields; type
// "mock" uses the mock world file.
struct BackendPreset {
  std::string name;
  std::string type;
  BackendConfig http;
  GenerationParams params;
};

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::string run_id;
  std::uint64_t seed = 0;

  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> profiles;
  std::optional<std::filesystem::path> prices;
  std::filesystem::path output_dir = "runs";
  std::optional<std::filesystem::path> cache;
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> mock_world;

  std::map<std::string, BackendPreset> presets;
  std::map<std::string, std::string> roles;  // anonymizer/adversary/utility/judge/self

  EngineConfig engine;
  DatasetConfig datasets;
  RefinePolicy refine;
  HardFilterConfig hardset;

  // Config with every secret-free field echoed, for manifests.
  nlohmann::json echo() const;
};

// Parses the JSON config document. Throws kConfigError.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Role name -> backend, built once per process. Presets shared by several
// roles share one client along with its rate limiter.
class BackendRegistry {
 public:
  BackendRegistry(const RunConfig& cfg, bool force_mock, const TemplateSet& templates);

  RoleBackend role(const std::string& name) const;
  EngineBackends engine_backends() const;

 private:
  std::map<std::string, RoleBackend> roles_;
};

// <output_dir>/<run_id>/<stage>/ with a DONE marker per completed stage.
class RunStore {
 public:
  RunStore(std::filesystem::path output_dir, std::string run_id);

  const std::string& run_id() const { return run_id_; }
  std::filesystem::path root() const { return output_dir_ / run_id_; }
  std::filesystem::path stage_dir(const std::string& stage) const { return root() / stage; }

  bool exists() const;
  bool stage_done(const std::string& stage) const;
  void mark_done(const std::string& stage, const nlohmann::json& summary) const;
  // Throws kUnknownRun when the run or the stage is missing.
  void require_stage(const std::string& stage) const;

 private:
  std::filesystem::path output_dir_;
  std::string run_id_;
};

// Entry point behind the anonkit binary. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anonkit
