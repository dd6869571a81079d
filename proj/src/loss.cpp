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

#include "anonkit/loss.hpp"

#include <algorithm>
#include <cmath>

#include "anonkit/error.hpp"

namespace anonkit {

void LossWeights::check() const {
  if (lambda_anon < 0 || lambda_priv < 0 || lambda_util < 0) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be nonnegative");
  }
  if (lambda_anon + lambda_priv + lambda_util <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "at least one loss weight must be positive");
  }
  if (!(beta > 0)) throw Error(ErrorCode::kInvalidArgument, "beta must be positive");
}

double sft_combined_loss(double l_anon, double l_priv, double l_util, const LossWeights& w) {
  return w.lambda_anon * l_anon + w.lambda_priv * l_priv + w.lambda_util * l_util;
}

double softplus(double x) {
  // max(x, 0) + log1p(exp(-|x|)) stays finite for any finite x.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dpo_margin(double logp_w, double logp_l, double logp_ref_w, double logp_ref_l,
                  double beta) {
  return beta * ((logp_w - logp_ref_w) - (logp_l - logp_ref_l));
}

double dpo_loss(double logp_w, double logp_l, double logp_ref_w, double logp_ref_l, double beta) {
  return softplus(-dpo_margin(logp_w, logp_l, logp_ref_w, logp_ref_l, beta));
}

std::array<double, 4> dpo_grad(double logp_w, double logp_l, double logp_ref_w,
                               double logp_ref_l, double beta) {
  const double s = beta * sigmoid(-dpo_margin(logp_w, logp_l, logp_ref_w, logp_ref_l, beta));
  return {-s, s, s, -s};
}

}  // namespace anonkit
