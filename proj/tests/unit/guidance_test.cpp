// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "sdvicl/guidance/guidance.hpp"
#include "test_support.hpp"

namespace sdvicl {
namespace {

using testing::random_latent;

NoisePrediction constant_eta(float value, int n = 6) {
  return {Planar::Constant(4, n, value), NoisePrediction::Source::kDefault, 0};
}

TEST(SwapGuide, FrozenBlend) {
  const auto out = swap_guide(constant_eta(0), constant_eta(1), 1, 70, 3.5);
  EXPECT_NEAR(out.eta(0, 0), 3.45f, 1e-6f);
  EXPECT_EQ(out.source, NoisePrediction::Source::kCombined);
}

TEST(SwapGuide, FirstStepAndZeroGammaAreExactIdentities) {
  std::mt19937_64 rng(1);
  const Latent a = random_latent(rng, 4, 4, 4), b = random_latent(rng, 4, 4, 4);
  const NoisePrediction d{a.values, NoisePrediction::Source::kDefault, 0};
  const NoisePrediction m{b.values, NoisePrediction::Source::kModified, 0};
  EXPECT_EQ(swap_guide(d, m, 70, 70, 3.5).eta, d.eta);
  for (int t = 1; t <= 70; ++t) EXPECT_EQ(swap_guide(d, m, t, 70, 0.0).eta, d.eta) << t;
  for (int t = 1; t <= 70; ++t) EXPECT_EQ(swap_guide(d, d, t, 70, 3.5).eta, d.eta) << t;
}

TEST(SwapGuide, WeightNonDecreasingAsTFalls) {
  double prev = -1;
  for (int t = 70; t >= 1; --t) {
    const double w = swap_weight(t, 70, 3.5);
    EXPECT_GE(w, 0.0);
    EXPECT_GE(w, prev);
    prev = w;
  }
}

TEST(SwapGuide, AffineInInputs) {
  std::mt19937_64 rng(2);
  const Latent a = random_latent(rng, 4, 4, 4), b = random_latent(rng, 4, 4, 4);
  const NoisePrediction d{a.values, {}, 0}, m{b.values, {}, 0};
  const auto out = swap_guide(d, m, 20, 50, 2.0);
  const double w = 2.0 * 30 / 50;
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    EXPECT_NEAR(out.eta.data()[i], (1 - w) * a.values.data()[i] + w * b.values.data()[i], 1e-5);
  }
}

TEST(SwapGuide, Errors) {
  EXPECT_THROW(swap_guide(constant_eta(0, 6), constant_eta(0, 7), 1, 10, 1.0), Error);
  EXPECT_THROW(swap_guide(constant_eta(0), constant_eta(0), 0, 10, 1.0), ConfigError);
  EXPECT_THROW(swap_guide(constant_eta(0), constant_eta(0), 11, 10, 1.0), ConfigError);
}

// Moments in double precision with plain loops.
void moments(const Latent& z, int c, double& mean, double& sd) {
  const Eigen::Index n = z.values.cols();
  mean = 0;
  for (Eigen::Index i = 0; i < n; ++i) mean += z.values(c, i);
  mean /= n;
  double var = 0;
  for (Eigen::Index i = 0; i < n; ++i) var += (z.values(c, i) - mean) * (z.values(c, i) - mean);
  sd = std::sqrt(var / n);
}

TEST(Adain, AffineExample) {
  // z_D with exactly zero mean and unit population std per channel.
  Latent zd(1, 1, 4);
  zd.values << -1, 1, -1, 1;
  Latent zb(1, 1, 4);
  zb.values << -1, 5, -1, 5;  // mean 2, std 3
  const Latent out = adain(zd, zb);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(out.values(0, i), 3 * zd.values(0, i) + 2, 1e-6f);
}

TEST(Adain, SelfIsIdentity) {
  std::mt19937_64 rng(3);
  const Latent z = random_latent(rng, 4, 8, 8);
  EXPECT_LE(testing::max_abs_diff(adain(z, z), z), 1e-5f);
}

TEST(Adain, MatchesTargetMomentsAndIsIdempotent) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Latent zd = random_latent(rng, 4, 8, 8, 0.5f + trial);
    Latent zb = random_latent(rng, 4, 8, 8, 2.0f);
    zb.values.array() += float(trial) - 3.0f;
    const Latent out = adain(zd, zb);
    for (int c = 0; c < 4; ++c) {
      double m1, s1, m2, s2;
      moments(out, c, m1, s1);
      moments(zb, c, m2, s2);
      EXPECT_NEAR(m1, m2, 1e-5);
      EXPECT_NEAR(s1, s2, 1e-5);
    }
    EXPECT_LE(testing::max_abs_diff(adain(out, zb), out), 1e-5f);
  }
}

TEST(Adain, ConstantChannel) {
  std::mt19937_64 rng(5);
  Latent zd = random_latent(rng, 4, 4, 4);
  const Latent zb = random_latent(rng, 4, 4, 4);
  zd.values.row(2).setConstant(0.7f);
  try {
    adain(zd, zb);
    FAIL();
  } catch (const DegenerateStatisticsError& e) {
    EXPECT_EQ(e.channel(), 2);
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateStatistics);
  }
  const Latent out = adain_or_identity(zd, zb);
  EXPECT_EQ(out.values.row(2), zd.values.row(2));
  double m, s, mb, sb;
  moments(out, 0, m, s);
  moments(zb, 0, mb, sb);
  EXPECT_NEAR(m, mb, 1e-5);
}

TEST(Adain, ShapeMismatch) {
  std::mt19937_64 rng(6);
  EXPECT_THROW(adain(random_latent(rng, 4, 4, 4), random_latent(rng, 4, 4, 8)), Error);
}

TEST(MeanLatent, AverageAndOrder) {
  std::mt19937_64 rng(7);
  const std::vector<Latent> zs{random_latent(rng, 2, 2, 2), random_latent(rng, 2, 2, 2), random_latent(rng, 2, 2, 2)};
  const std::vector<Latent> rev(zs.rbegin(), zs.rend());
  const Latent m = mean_latent<float>(zs);
  EXPECT_LE(testing::max_abs_diff(m, mean_latent<float>(rev)), 1e-6f);
  EXPECT_NEAR(m.values(1, 3), (zs[0].values(1, 3) + zs[1].values(1, 3) + zs[2].values(1, 3)) / 3, 1e-6f);
  EXPECT_THROW(mean_latent<float>(std::vector<Latent>{}), Error);
}

}  // namespace
}  // namespace sdvicl
