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

#include "anonkit/refine.hpp"

#include "anonkit/error.hpp"
#include "anonkit/text_util.hpp"

namespace anonkit {

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kClean: return "clean";
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kUtilityFloor: return "utility_floor";
    case StopReason::kStalled: return "stalled";
  }
  return "?";
}

void RefinePolicy::check() const {
  if (max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (certainty_stop_threshold < 1 || certainty_stop_threshold > 5) {
    throw Error(ErrorCode::kInvalidArgument, "certainty_stop_threshold must be in [1, 5]");
  }
  if (min_utility < 0.0 || min_utility > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "min_utility must be in [0, 1]");
  }
  if (kinds.empty()) throw Error(ErrorCode::kInvalidArgument, "kinds must be nonempty");
}

nlohmann::json to_json(const RefinePolicy& p) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : p.kinds) kinds.push_back(kind_name(k));
  return {{"max_iters", p.max_iters},
          {"certainty_stop_threshold", p.certainty_stop_threshold},
          {"min_utility", p.min_utility},
          {"kinds", kinds},
          {"utility_feedback", p.utility_feedback}};
}

RefinePolicy refine_policy_from_json(const nlohmann::json& j) {
  RefinePolicy p;
  p.max_iters = j.value("max_iters", p.max_iters);
  p.certainty_stop_threshold = j.value("certainty_stop_threshold", p.certainty_stop_threshold);
  p.min_utility = j.value("min_utility", p.min_utility);
  p.utility_feedback = j.value("utility_feedback", p.utility_feedback);
  if (j.contains("kinds")) {
    p.kinds.clear();
    for (const auto& k : j["kinds"]) p.kinds.push_back(kind_from_name(k.get<std::string>()));
  }
  p.check();
  return p;
}

namespace {

nlohmann::json iteration_json(const RefineIteration& it) {
  nlohmann::json inferred = nlohmann::json::array();
  for (const auto& g : it.inferred) inferred.push_back(to_json(g));
  nlohmann::json j{{"text", it.text}, {"inferred", inferred}, {"utility", to_json(it.utility)},
                   {"utility_score", utility_score(it.utility)}};
  if (it.stop_reason) j["stop_reason"] = stop_reason_name(*it.stop_reason);
  return j;
}

std::vector<AttributeGuess> significant(const std::vector<AttributeGuess>& inferred, int threshold) {
  std::vector<AttributeGuess> out;
  for (const auto& g : inferred) {
    if (g.certainty.value() >= threshold) out.push_back(g);
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const RefineReport& r) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& it : r.iterations) iterations.push_back(iteration_json(it));
  nlohmann::json j{{"iterations", iterations}, {"final_text", r.final_text}};
  j["stop_reason"] = r.stop_reason ? nlohmann::json(stop_reason_name(*r.stop_reason))
                                   : nlohmann::json(nullptr);
  if (r.rejected_candidate) j["rejected_candidate"] = iteration_json(*r.rejected_candidate);
  return j;
}

RefineReport self_refine(const std::string& x0, const RefinePolicy& policy, const RoleBackend& model,
                         const TemplateSet& templates) {
  policy.check();
  if (text::trim(x0).empty()) throw Error(ErrorCode::kInvalidArgument, "input text is empty");
  RefineReport report;
  auto finish = [&](StopReason reason) {
    report.iterations.back().stop_reason = reason;
    report.stop_reason = reason;
    report.final_text = report.iterations.back().text;
    return report;
  };
  try {
    RefineIteration first;
    first.text = x0;
    first.utility = judge_utility(x0, x0, model, templates);
    first.inferred = infer_attributes(x0, policy.kinds, model, true, templates);
    report.iterations.push_back(std::move(first));

    int rewrites = 0;
    int unchanged = 0;
    while (true) {
      const RefineIteration& cur = report.iterations.back();
      const auto flagged = significant(cur.inferred, policy.certainty_stop_threshold);
      if (flagged.empty()) return finish(StopReason::kClean);
      if (rewrites == policy.max_iters) return finish(StopReason::kMaxIters);

      AnonymizerPromptOptions opts;
      if (policy.utility_feedback) opts.utility = &cur.utility;
      auto reply = model.complete(render_anonymizer_prompt(cur.text, flagged, opts, templates));
      RefineIteration next;
      next.text = parse_anonymizer_reply(reply);
      ++rewrites;
      next.utility = judge_utility(x0, next.text, model, templates);
      if (utility_score(next.utility) < policy.min_utility) {
        report.rejected_candidate = std::move(next);
        return finish(StopReason::kUtilityFloor);
      }
      next.inferred = infer_attributes(next.text, policy.kinds, model, true, templates);
      unchanged = next.text == cur.text ? unchanged + 1 : 0;
      report.iterations.push_back(std::move(next));
      if (unchanged >= 2) return finish(StopReason::kStalled);
    }
  } catch (const RefineError&) {
    throw;
  } catch (const Error& e) {
    if (!report.iterations.empty()) report.final_text = report.iterations.back().text;
    throw RefineError(e, std::move(report));
  }
}

}  // namespace anonkit
