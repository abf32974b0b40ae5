// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>

#include "sdvicl/core/error.hpp"
#include "sdvicl/core/types.hpp"

namespace sdvicl {

/// Noise prediction of the denoiser for one path at one step.
template <typename Scalar>
struct NoisePredictionT {
  enum class Source { kDefault, kModified, kCombined };

  PlanarT<Scalar> eta;  // same layout as the latent it updates
  Source source = Source::kDefault;
  int timestep = 0;
};

using NoisePrediction = NoisePredictionT<float>;

/// Blend factor gamma * (T - t) / T; zero at the first step (t = T).
inline double swap_weight(int t, int total_steps, double gamma) {
  return gamma * double(total_steps - t) / double(total_steps);
}

/// eta = eta_default + w(t) * (eta_modified - eta_default).
template <typename Scalar>
NoisePredictionT<Scalar> swap_guide(const NoisePredictionT<Scalar>& eta_default,
                                    const NoisePredictionT<Scalar>& eta_modified, int t, int total_steps,
                                    double gamma) {
  if (eta_default.eta.rows() != eta_modified.eta.rows() || eta_default.eta.cols() != eta_modified.eta.cols()) {
    throw_dimension("swap_guide: noise predictions differ in shape");
  }
  if (total_steps < 1 || t < 1 || t > total_steps) {
    throw ConfigError("t", "swap_guide step must lie in [1, T]");
  }
  NoisePredictionT<Scalar> out;
  out.source = NoisePredictionT<Scalar>::Source::kCombined;
  out.timestep = eta_default.timestep;
  const double w = swap_weight(t, total_steps, gamma);
  if (w == 0.0) {
    out.eta = eta_default.eta;
  } else {
    out.eta = eta_default.eta + Scalar(w) * (eta_modified.eta - eta_default.eta);
  }
  return out;
}

/// Per-channel spatial mean and population standard deviation.
template <typename Scalar>
void channel_moments(const PlanarT<Scalar>& x, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mean,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& stddev) {
  mean = x.rowwise().mean();
  stddev.resize(x.rows());
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    stddev(c) = std::sqrt((x.row(c).array() - mean(c)).square().mean());
  }
}

/// Adaptive instance normalization of z_d onto the per-channel spatial
/// moments of z_b. Throws DegenerateStatisticsError on a constant channel of z_d.
template <typename Scalar>
LatentT<Scalar> adain(const LatentT<Scalar>& z_d, const LatentT<Scalar>& z_b) {
  if (!z_d.same_shape(z_b)) throw_dimension("adain: " + shape_string(z_d) + " vs " + shape_string(z_b));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mu_d, sd_d, mu_b, sd_b;
  channel_moments(z_d.values, mu_d, sd_d);
  channel_moments(z_b.values, mu_b, sd_b);
  LatentT<Scalar> out = z_d;
  for (Eigen::Index c = 0; c < z_d.values.rows(); ++c) {
    if (!(sd_d(c) > Scalar(0))) throw DegenerateStatisticsError(static_cast<int>(c));
    out.values.row(c) = ((z_d.values.row(c).array() - mu_d(c)) / sd_d(c) * sd_b(c) + mu_b(c)).matrix();
  }
  return out;
}

/// Like adain, but a constant channel of z_d is passed through unchanged.
template <typename Scalar>
LatentT<Scalar> adain_or_identity(const LatentT<Scalar>& z_d, const LatentT<Scalar>& z_b) {
  if (!z_d.same_shape(z_b)) throw_dimension("adain: " + shape_string(z_d) + " vs " + shape_string(z_b));
  LatentT<Scalar> out = z_d;
  const Eigen::Index hw = z_d.values.cols();
  for (Eigen::Index c = 0; c < z_d.values.rows(); ++c) {
    LatentT<Scalar> d1(1, 1, static_cast<int>(hw)), b1(1, 1, static_cast<int>(hw));
    d1.values = z_d.values.row(c);
    b1.values = z_b.values.row(c);
    try {
      out.values.row(c) = adain(d1, b1).values;
    } catch (const DegenerateStatisticsError&) {
    }
  }
  return out;
}

/// Element-wise mean of several latents (AdaIN target for n > 1 prompts).
template <typename Scalar>
LatentT<Scalar> mean_latent(std::span<const LatentT<Scalar>> zs) {
  if (zs.empty()) throw Error(ErrorKind::kEmptyPrompt, "mean_latent of no latents");
  LatentT<Scalar> out = zs.front();
  for (std::size_t i = 1; i < zs.size(); ++i) {
    if (!zs[i].same_shape(out)) throw_dimension("mean_latent: shape mismatch");
    out.values += zs[i].values;
  }
  if (zs.size() > 1) out.values /= Scalar(zs.size());
  return out;
}

}  // namespace sdvicl
