// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace sdvicl {

/// Cumulative signal levels of the base model's training schedule,
/// indexed by training timestep.
struct NoiseLevels {
  std::vector<double> alphas_cumprod;

  int base_timesteps() const { return static_cast<int>(alphas_cumprod.size()); }

  /// betas = linspace(sqrt(b0), sqrt(b1), n)^2, the latent-diffusion default.
  static NoiseLevels scaled_linear(int n = 1000, double beta_start = 0.00085, double beta_end = 0.012);
};

/// Coefficients of one sampler step from timestep `t` to `t_prev`.
struct StepCoefficients {
  int t = 0;
  int t_prev = -1;  // -1 marks the final step into clean space
  double alpha_bar = 0.0;
  double alpha_bar_prev = 1.0;
  double sigma = 0.0;  // full DDPM posterior standard deviation
};

struct DenoiseSchedule {
  int base_timesteps = 0;
  std::vector<int> timestep_indices;       // strictly decreasing
  std::vector<StepCoefficients> steps;     // empty until coefficients are attached

  int num_steps() const { return static_cast<int>(timestep_indices.size()); }
  bool has_coefficients() const { return steps.size() == timestep_indices.size(); }
};

/// T evenly spaced indices from the top of [0, base_timesteps) downward:
/// index_k = base - 1 - floor(k * base / T).
DenoiseSchedule make_schedule(int num_steps, int base_timesteps);

/// Same indices, with per-step coefficients taken from `levels`.
DenoiseSchedule make_schedule(int num_steps, const NoiseLevels& levels);

}  // namespace sdvicl
