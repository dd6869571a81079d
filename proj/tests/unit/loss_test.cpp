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

#include <cmath>
#include <random>

#include "anonkit/error.hpp"
#include "anonkit/loss.hpp"

using namespace anonkit;

TEST(Loss, ZeroMarginCostsLogTwo) {
  EXPECT_NEAR(dpo_loss(-3.0, -3.0, -2.0, -2.0, 0.01), std::log(2.0), 1e-12);
  EXPECT_NEAR(dpo_loss(-1.5, -7.25, -1.5, -7.25, 0.5), std::log(2.0), 1e-12);
}

TEST(Loss, KnownValue) {
  // margin of 10 nats at beta 0.01: softplus(-0.1)
  EXPECT_NEAR(dpo_loss(-10.0, -20.0, -10.0, -10.0, 0.01), 0.6443966600735709, 1e-12);
  EXPECT_NEAR(dpo_margin(-10.0, -20.0, -10.0, -10.0, 0.01), 0.1, 1e-15);
}

TEST(Loss, SoftplusStaysFinite) {
  EXPECT_DOUBLE_EQ(softplus(1000.0), 1000.0);
  EXPECT_GT(softplus(-1000.0), 0.0 - 1e-300);
  EXPECT_LT(softplus(-1000.0), 1e-300);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(-40.0), std::exp(-40.0), 1e-30);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_DOUBLE_EQ(sigmoid(1000.0), 1.0);
  EXPECT_TRUE(std::isfinite(dpo_loss(0.0, -1e6, 0.0, 0.0, 1.0)));
  EXPECT_TRUE(std::isfinite(dpo_loss(-1e6, 0.0, 0.0, 0.0, 1.0)));
}

TEST(Loss, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lp(-60.0, -1.0);
  std::uniform_real_distribution<double> bd(0.01, 1.0);
  for (int n = 0; n < 200; ++n) {
    std::array<double, 4> x{lp(rng), lp(rng), lp(rng), lp(rng)};
    const double beta = bd(rng);
    auto f = [&](std::array<double, 4> v) { return dpo_loss(v[0], v[1], v[2], v[3], beta); };
    const auto g = dpo_grad(x[0], x[1], x[2], x[3], beta);
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-5;
      auto up = x;
      auto dn = x;
      up[k] += h;
      dn[k] -= h;
      const double fd = (f(up) - f(dn)) / (2 * h);
      EXPECT_NEAR(g[k], fd, 1e-7 + 1e-6 * std::abs(fd)) << "component " << k;
    }
  }
}

TEST(Loss, GradientSignsFavourTheWinner) {
  const auto g = dpo_grad(-5.0, -5.0, -5.0, -5.0, 0.1);
  EXPECT_LT(g[0], 0.0);
  EXPECT_GT(g[1], 0.0);
  EXPECT_NEAR(g[0], -0.05, 1e-15);
  EXPECT_DOUBLE_EQ(g[0], -g[1]);
  EXPECT_DOUBLE_EQ(g[2], -g[0]);
  EXPECT_DOUBLE_EQ(g[3], -g[1]);
}

TEST(Loss, CombinedSftLoss) {
  LossWeights w;
  EXPECT_DOUBLE_EQ(sft_combined_loss(1.0, 2.0, 3.0, w), 6.0);
  w.lambda_priv = 0.5;
  w.lambda_util = 0.0;
  EXPECT_DOUBLE_EQ(sft_combined_loss(1.0, 2.0, 3.0, w), 2.0);
  w.beta = 0.0;
  EXPECT_THROW(w.check(), Error);
  w = LossWeights{};
  w.lambda_anon = -1.0;
  EXPECT_THROW(w.check(), Error);
}
