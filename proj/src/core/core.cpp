// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "sdvicl/core/error.hpp"
#include "sdvicl/core/schedule.hpp"
#include "sdvicl/core/types.hpp"

namespace sdvicl {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kBackend: return "backend";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kEmptyPrompt: return "empty-prompt";
    case ErrorKind::kIncompatibleSchedule: return "incompatible-schedule";
    case ErrorKind::kMalformedTrajectory: return "malformed-trajectory";
    case ErrorKind::kDegenerateStatistics: return "degenerate-statistics";
    case ErrorKind::kAnnotation: return "annotation";
    case ErrorKind::kIncompatibleEmbeddings: return "incompatible-embeddings";
  }
  return "unknown";
}

std::string PathId::name() const {
  switch (role) {
    case Role::kPromptImage: return "A" + std::to_string(index);
    case Role::kPromptTarget: return "B" + std::to_string(index);
    case Role::kQuery: return "C";
    case Role::kPrediction: return "D";
  }
  return "?";
}

NoiseLevels NoiseLevels::scaled_linear(int n, double beta_start, double beta_end) {
  NoiseLevels levels;
  levels.alphas_cumprod.resize(n);
  const double s0 = std::sqrt(beta_start);
  const double s1 = std::sqrt(beta_end);
  double prod = 1.0;
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? s0 : s0 + (s1 - s0) * i / double(n - 1);
    prod *= 1.0 - s * s;
    levels.alphas_cumprod[i] = prod;
  }
  return levels;
}

DenoiseSchedule make_schedule(int num_steps, int base_timesteps) {
  if (base_timesteps < 1) throw ConfigError("base_timesteps", "must be positive");
  if (num_steps < 1 || num_steps > base_timesteps) {
    throw ConfigError("steps", "must lie in [1, " + std::to_string(base_timesteps) + "], got " +
                                   std::to_string(num_steps));
  }
  DenoiseSchedule s;
  s.base_timesteps = base_timesteps;
  s.timestep_indices.reserve(num_steps);
  for (int k = 0; k < num_steps; ++k) {
    const long long offset = static_cast<long long>(k) * base_timesteps / num_steps;
    s.timestep_indices.push_back(base_timesteps - 1 - static_cast<int>(offset));
  }
  return s;
}

DenoiseSchedule make_schedule(int num_steps, const NoiseLevels& levels) {
  DenoiseSchedule s = make_schedule(num_steps, levels.base_timesteps());
  const auto& ac = levels.alphas_cumprod;
  s.steps.reserve(num_steps);
  for (int k = 0; k < num_steps; ++k) {
    StepCoefficients c;
    c.t = s.timestep_indices[k];
    c.t_prev = k + 1 < num_steps ? s.timestep_indices[k + 1] : -1;
    c.alpha_bar = ac[c.t];
    // The final step lands on the first training level, which keeps the
    // posterior variance strictly positive whenever t > 0.
    c.alpha_bar_prev = c.t_prev >= 0 ? ac[c.t_prev] : ac[0];
    const double var = (1.0 - c.alpha_bar_prev) / (1.0 - c.alpha_bar) * (1.0 - c.alpha_bar / c.alpha_bar_prev);
    c.sigma = std::sqrt(std::max(var, 0.0));
    s.steps.push_back(c);
  }
  return s;
}

}  // namespace sdvicl
