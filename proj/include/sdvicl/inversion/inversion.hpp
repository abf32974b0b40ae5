// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdvicl/core/archive.hpp"
#include "sdvicl/core/schedule.hpp"
#include "sdvicl/core/types.hpp"
#include "sdvicl/pipeline/backend.hpp"

namespace sdvicl {

/// Terminal latent plus the per-step noise maps that make the stochastic
/// sampler land exactly on the source latent (edit-friendly DDPM inversion).
struct NoiseTrajectory {
  Latent terminal;
  std::vector<Planar> step_noises;  // one per scheduled step, same shape as the latent
  DenoiseSchedule schedule;
  std::string backend_id;
  std::uint64_t seed = 0;
  std::uint64_t source_hash = 0;

  int num_steps() const { return static_cast<int>(step_noises.size()); }
};

/// mu(x_t, eps): the sampler's deterministic part,
///   sqrt(abar_prev) * x0_pred + sqrt(1 - abar_prev - sigma^2) * eps.
Planar posterior_mean(const Planar& x_t, const Planar& eps, const StepCoefficients& c);

/// x_prev = mu(x_t, eps) + sigma * noise. A step with zero variance adds
/// the noise map unscaled, so the map still carries the exact residual.
Latent sampler_step(const Latent& x_t, const Planar& eps, const StepCoefficients& c, const Planar& noise);

/// Per-step noise scale used by sampler_step.
inline double noise_scale(const StepCoefficients& c) { return c.sigma > 0.0 ? c.sigma : 1.0; }

/// Schedule with coefficients attached from the backend, or an
/// incompatible-schedule error when base timestep counts differ.
DenoiseSchedule bind_schedule(const DenoiseSchedule& schedule, const DenoiserBackend& backend);

/// Edit-friendly DDPM inversion. Intermediate noisy latents are drawn
/// independently from `seed`; each step's noise map is the residual that
/// forces the sampler from x_t onto the next sampled latent.
NoiseTrajectory invert(const Latent& z0, const DenoiseSchedule& schedule, DenoiserBackend& backend,
                       std::uint64_t seed);

/// Replays a trajectory through the sampler and returns the t = 0 latent.
/// `interceptor`, if given, is handed to every forward (read-only hooks).
Latent reconstruct(const NoiseTrajectory& traj, DenoiserBackend& backend,
                   AttentionInterceptor* interceptor = nullptr);

TensorArchive to_archive(const NoiseTrajectory& traj);
NoiseTrajectory trajectory_from_archive(const TensorArchive& archive);
void save_trajectory(const NoiseTrajectory& traj, const std::string& path);
NoiseTrajectory load_trajectory(const std::string& path);

/// File cache of inversions keyed by (backend, schedule, seed, latent content).
class InversionCache {
 public:
  explicit InversionCache(std::string dir);

  NoiseTrajectory get_or_invert(const Latent& z0, const DenoiseSchedule& schedule, DenoiserBackend& backend,
                                std::uint64_t seed);
  std::string path_for(const Latent& z0, const DenoiseSchedule& schedule, const DenoiserBackend& backend,
                       std::uint64_t seed) const;

  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  std::string dir_;
  int hits_ = 0;
  int misses_ = 0;
};

}  // namespace sdvicl
