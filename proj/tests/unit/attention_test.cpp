// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "sdvicl/attention/attention.hpp"
#include "sdvicl/attention/capture.hpp"
#include "test_support.hpp"

namespace sdvicl {
namespace {

using testing::random_heads;

// Plain loops, no Eigen expressions: the reference the library is checked against.
std::vector<std::vector<double>> brute_attention(const MatrixT<float>& q, const MatrixT<float>& k, double scale) {
  std::vector<std::vector<double>> a(q.rows(), std::vector<double>(k.rows()));
  for (int i = 0; i < q.rows(); ++i) {
    double mx = -1e300;
    for (int j = 0; j < k.rows(); ++j) {
      double dot = 0;
      for (int d = 0; d < q.cols(); ++d) dot += double(q(i, d)) * k(j, d);
      a[i][j] = dot * scale;
      mx = std::max(mx, a[i][j]);
    }
    double sum = 0;
    for (double& v : a[i]) sum += (v = std::exp(v - mx));
    for (double& v : a[i]) v /= sum;
  }
  return a;
}

TEST(Softmax, RowsSumToOneAndArePositive) {
  std::mt19937_64 rng(1);
  const auto q = random_heads(rng, 3, 17, 8, 4.0f), k = random_heads(rng, 3, 23, 8, 4.0f);
  const auto a = attention_map(q, k);
  for (const auto& m : a.heads) {
    EXPECT_LT((m.rowwise().sum().array() - 1.0f).abs().maxCoeff(), 1e-6f);
    EXPECT_GT(m.minCoeff(), 0.0f);
  }
}

TEST(Softmax, StableForHugeLogits) {
  MatrixT<float> logits(1, 3);
  logits << 1e30f, 1e30f, -1e30f;
  const auto s = softmax_rows(logits);
  EXPECT_TRUE(s.allFinite());
  EXPECT_NEAR(s(0, 0), 0.5f, 1e-6f);
}

TEST(StandardUpdate, IdentityRowsMatchBruteForce) {
  MatrixT<float> eye = MatrixT<float>::Identity(2, 2);
  AttentionTensors at{HeadStackF({eye}), HeadStackF({eye}), HeadStackF({eye}), {}, {}, 0};
  const auto out = standard_update(at);
  const auto ref = brute_attention(eye, eye, 1.0 / std::sqrt(2.0));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(out.heads[0](i, j), ref[i][j], 1e-7);  // V = I so the update is alpha
  }
  EXPECT_NEAR(ref[0][0], std::exp(1 / std::sqrt(2.0)) / (std::exp(1 / std::sqrt(2.0)) + 1), 1e-12);
}

TEST(StandardUpdate, ZeroValuesGiveZero) {
  std::mt19937_64 rng(2);
  AttentionTensors at{random_heads(rng, 2, 5, 4), random_heads(rng, 2, 5, 4), HeadStackF::zeros(2, 5, 4), {}, {}, 0};
  const auto out = standard_update(at);
  for (const auto& m : out.heads) EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(StandardUpdate, SingleTokenCopiesValue) {
  std::mt19937_64 rng(3);
  AttentionTensors at{random_heads(rng, 1, 1, 4), random_heads(rng, 1, 1, 4), random_heads(rng, 1, 1, 4), {}, {}, 0};
  EXPECT_EQ(standard_update(at).max_abs_diff(at.v), 0.0f);
}

TEST(StandardUpdate, ShapeMismatchIsDimensionError) {
  std::mt19937_64 rng(4);
  AttentionTensors at{random_heads(rng, 1, 3, 4), random_heads(rng, 1, 3, 5), random_heads(rng, 1, 3, 4), {}, {}, 0};
  try {
    standard_update(at);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Contrast, FrozenRow) {
  HeadStackF a({MatrixT<float>(1, 2)});
  a.heads[0] << 0.2f, 0.8f;
  const auto c = contrast(a, 1.67);
  EXPECT_NEAR(c.heads[0](0, 0), -0.001f, 1e-6f);
  EXPECT_NEAR(c.heads[0](0, 1), 1.001f, 1e-6f);
  const auto flat = contrast(a, 0.0);
  EXPECT_NEAR(flat.heads[0](0, 0), 0.5f, 1e-7f);
  EXPECT_NEAR(flat.heads[0](0, 1), 0.5f, 1e-7f);
}

TEST(Contrast, BetaOneIdentityAndRowMeanPreserved) {
  std::mt19937_64 rng(5);
  const auto a = attention_map(random_heads(rng, 2, 9, 4), random_heads(rng, 2, 13, 4));
  EXPECT_LE(contrast(a, 1.0).max_abs_diff(a), 1e-6f);
  for (double beta : {0.0, 0.5, 1.67, 3.0}) {
    const auto c = contrast(a, beta);
    for (int h = 0; h < 2; ++h) {
      const Eigen::VectorXf before = a.heads[h].rowwise().mean(), after = c.heads[h].rowwise().mean();
      EXPECT_LE((before - after).cwiseAbs().maxCoeff(), 1e-6f) << beta;
    }
  }
}

// Direct evaluation of softmax(Q K^T / (tau sqrt d)), contrast, then times V.
HeadStackF oracle_single_prompt(const HeadStackF& q, const HeadStackF& k, const HeadStackF& v, double tau, double beta) {
  HeadStackF out = HeadStackF::zeros(q.num_heads(), q.tokens(), v.dim());
  for (int h = 0; h < q.num_heads(); ++h) {
    auto a = brute_attention(q.heads[h], k.heads[h], 1.0 / (tau * std::sqrt(double(q.dim()))));
    for (auto& row : a) {
      double mean = 0;
      for (double x : row) mean += x;
      mean /= row.size();
      for (double& x : row) x = mean + beta * (x - mean);
    }
    for (int i = 0; i < q.tokens(); ++i) {
      for (int d = 0; d < v.dim(); ++d) {
        double s = 0;
        for (int j = 0; j < k.tokens(); ++j) s += a[i][j] * v.heads[h](j, d);
        out.heads[h](i, d) = float(s);
      }
    }
  }
  return out;
}

TEST(ViclUpdate, SinglePromptMatchesScaledStandardAttention) {
  std::mt19937_64 rng(6);
  const auto q = random_heads(rng, 2, 16, 8), k = random_heads(rng, 2, 16, 8), v = random_heads(rng, 2, 16, 8);
  const std::vector<HeadStackF> ks{k}, vs{v};
  // beta = 1: the ensembled update with one prompt is plain attention with logits over tau.
  EXPECT_LE(vicl_update<float>(q, ks, vs, 0.4, 1.0).max_abs_diff(oracle_single_prompt(q, k, v, 0.4, 1.0)), 1e-6f);
  EXPECT_LE(vicl_update<float>(q, ks, vs, 0.4, 1.67).max_abs_diff(oracle_single_prompt(q, k, v, 0.4, 1.67)), 1e-6f);
  // and with tau = 1, beta = 1 it is the standard update itself
  AttentionTensors at{q, k, v, {}, {}, 0};
  EXPECT_LE(vicl_update<float>(q, ks, vs, 1.0, 1.0).max_abs_diff(standard_update(at)), 1e-6f);
}

TEST(ViclUpdate, DuplicatePromptInvariance) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto q = random_heads(rng, 2, 12, 8), k = random_heads(rng, 2, 12, 8), v = random_heads(rng, 2, 12, 8);
    const std::vector<HeadStackF> k1{k}, v1{v}, k2{k, k}, v2{v, v};
    for (double beta : {1.0, 1.67}) {
      const auto one = vicl_update<float>(q, k1, v1, 0.4, beta);
      const auto two = vicl_update<float>(q, k2, v2, 0.4, beta);
      EXPECT_LE(one.max_abs_diff(two), 1e-6f) << trial << " beta " << beta;
    }
  }
}

TEST(ViclUpdate, PermutationInvariance) {
  std::mt19937_64 rng(8);
  const auto q = random_heads(rng, 2, 10, 8);
  std::vector<HeadStackF> ks, vs;
  for (int i = 0; i < 4; ++i) ks.push_back(random_heads(rng, 2, 10, 8)), vs.push_back(random_heads(rng, 2, 10, 8));
  const auto base = vicl_update<float>(q, ks, vs, 0.4, 1.67);
  std::vector<int> order{0, 1, 2, 3};
  while (std::next_permutation(order.begin(), order.end())) {
    std::vector<HeadStackF> pk, pv;
    for (int i : order) pk.push_back(ks[i]), pv.push_back(vs[i]);
    EXPECT_LE(vicl_update<float>(q, pk, pv, 0.4, 1.67).max_abs_diff(base), 1e-6f);
  }
}

TEST(ViclUpdate, FlatLimitAveragesValues) {
  std::mt19937_64 rng(9);
  const auto q = random_heads(rng, 1, 3, 4), k = random_heads(rng, 1, 6, 4), v = random_heads(rng, 1, 6, 4);
  const std::vector<HeadStackF> ks{k}, vs{v};
  AttentionMap alpha;
  const auto out = vicl_update<float>(q, ks, vs, 1e6, 1.0, &alpha);
  EXPECT_LE((alpha.heads[0].array() - 1.0f / 6).abs().maxCoeff(), 1e-5f);
  const Eigen::RowVectorXf mean = v.heads[0].colwise().mean();
  for (int i = 0; i < 3; ++i) EXPECT_LE((out.heads[0].row(i) - mean).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(ViclUpdate, LowerTauSharpensAttention) {
  std::mt19937_64 rng(10);
  const auto q = random_heads(rng, 1, 8, 8), k = random_heads(rng, 1, 20, 8), v = random_heads(rng, 1, 20, 8);
  const std::vector<HeadStackF> ks{k}, vs{v};
  float prev = 0;
  for (double tau : {4.0, 1.0, 0.4, 0.1}) {
    AttentionMap alpha;
    vicl_update<float>(q, ks, vs, tau, 1.0, &alpha);
    const float peak = alpha.heads[0].rowwise().maxCoeff().mean();
    EXPECT_GT(peak, prev) << tau;
    prev = peak;
  }
}

TEST(ViclUpdate, Errors) {
  std::mt19937_64 rng(11);
  const auto q = random_heads(rng, 1, 4, 4);
  const std::vector<HeadStackF> none;
  try {
    vicl_update<float>(q, none, none, 0.4, 1.67);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyPrompt);
  }
  const std::vector<HeadStackF> ks{random_heads(rng, 1, 5, 4)}, vs{random_heads(rng, 1, 6, 4)};
  try {
    vicl_update<float>(q, ks, vs, 0.4, 1.67);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(ViclUpdate, DoublePrecisionInstantiation) {
  HeadStack<double> q({MatrixT<double>::Identity(2, 2)});
  const std::vector<HeadStack<double>> ks{q}, vs{q};
  const auto out = vicl_update<double>(q, ks, vs, 1.0, 1.0);
  EXPECT_NEAR(out.heads[0].rowwise().sum()(0), 1.0, 1e-12);
}

TEST(FeatureEnsemble, MeanProperties) {
  std::mt19937_64 rng(12);
  const auto x = random_heads(rng, 2, 5, 3);
  HeadStackF neg = x;
  for (auto& m : neg.heads) m = -m;
  const std::vector<HeadStackF> one{x}, same{x, x}, cancel{x, neg};
  EXPECT_EQ(feature_ensemble<float>(one).max_abs_diff(x), 0.0f);
  EXPECT_LE(feature_ensemble<float>(same).max_abs_diff(x), 1e-7f);
  EXPECT_LE(feature_ensemble<float>(cancel).max_abs_diff(HeadStackF::zeros(2, 5, 3)), 1e-7f);
  const std::vector<HeadStackF> bad{x, random_heads(rng, 2, 4, 3)};
  EXPECT_THROW(feature_ensemble<float>(bad), Error);
}

TEST(FeatureEnsemble, UpdateAveragesPerPromptResults) {
  std::mt19937_64 rng(13);
  const auto q = random_heads(rng, 2, 6, 4);
  std::vector<HeadStackF> ks, vs;
  for (int i = 0; i < 3; ++i) ks.push_back(random_heads(rng, 2, 6, 4)), vs.push_back(random_heads(rng, 2, 6, 4));
  std::vector<HeadStackF> per;
  for (int i = 0; i < 3; ++i) per.push_back(oracle_single_prompt(q, ks[i], vs[i], 0.4, 1.67));
  EXPECT_LE(feature_ensemble_update<float>(q, ks, vs, 0.4, 1.67).max_abs_diff(feature_ensemble<float>(per)), 1e-6f);
}

TEST(SelectSites, ByResolution) {
  std::vector<AttentionSite> all{{false, 0, 16}, {true, 1, 16}, {true, 2, 16}, {true, 3, 32},
                                 {true, 4, 32},  {true, 5, 64}, {true, 6, 64}};
  const std::vector<int> every{16, 32, 64}, low{16};
  const auto sel = select_sites(all, every);
  EXPECT_EQ(sel.size(), 6u);
  for (const auto& s : sel) EXPECT_TRUE(s.decoder);
  const auto only16 = select_sites(all, low);
  ASSERT_EQ(only16.size(), 2u);
  for (const auto& s : only16) EXPECT_EQ(s.resolution, 16);
}

TEST(Capture, FiltersAndKeys) {
  AttentionCapture cap;
  cap.layer_filter = {3};
  const AttentionSite keep{true, 3, 32}, skip{true, 4, 32};
  EXPECT_TRUE(cap.wants(keep, 0));
  EXPECT_FALSE(cap.wants(skip, 0));
  std::mt19937_64 rng(14);
  cap.record(keep, 2, attention_map(random_heads(rng, 2, 4, 4), random_heads(rng, 2, 6, 4)));
  EXPECT_EQ(cap.size(), 2u);
  EXPECT_EQ(AttentionCapture::key(keep, 2, 1), "up3_r32/step2/head1");
}

}  // namespace
}  // namespace sdvicl
