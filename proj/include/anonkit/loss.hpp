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

#include <array>

namespace anonkit {

struct LossWeights {
  double lambda_anon = 1.0;
  double lambda_priv = 1.0;
  double lambda_util = 1.0;
  double beta = 0.01;

  void check() const;  // throws kInvalidArgument
};

// Weighted sum of the three mean negative log-likelihoods.
double sft_combined_loss(double l_anon, double l_priv, double l_util, const LossWeights& w);

// log(1 + e^x) without overflow for large |x|.
double softplus(double x);
double sigmoid(double x);

// beta * ((logp_w - logp_ref_w) - (logp_l - logp_ref_l))
double dpo_margin(double logp_w, double logp_l, double logp_ref_w, double logp_ref_l, double beta);

// -log sigmoid(z) = softplus(-z) with z = dpo_margin(...).
double dpo_loss(double logp_w, double logp_l, double logp_ref_w, double logp_ref_l, double beta);

// Partial derivatives with respect to (logp_w, logp_l, logp_ref_w, logp_ref_l).
std::array<double, 4> dpo_grad(double logp_w, double logp_l, double logp_ref_w,
                               double logp_ref_l, double beta);

}  // namespace anonkit
