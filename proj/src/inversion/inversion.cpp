// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/inversion/inversion.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

namespace sdvicl {
namespace {

Planar gaussian_like(const Planar& shape, std::mt19937_64& rng) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  Planar out(shape.rows(), shape.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = nd(rng);
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

Planar posterior_mean(const Planar& x_t, const Planar& eps, const StepCoefficients& c) {
  const float sqrt_ab = float(std::sqrt(c.alpha_bar));
  const float sqrt_1mab = float(std::sqrt(1.0 - c.alpha_bar));
  const float sqrt_ab_prev = float(std::sqrt(c.alpha_bar_prev));
  const float dir = float(std::sqrt(std::max(0.0, 1.0 - c.alpha_bar_prev - c.sigma * c.sigma)));
  const Planar x0_pred = (x_t - sqrt_1mab * eps) / sqrt_ab;
  return sqrt_ab_prev * x0_pred + dir * eps;
}

Latent sampler_step(const Latent& x_t, const Planar& eps, const StepCoefficients& c, const Planar& noise) {
  if (eps.rows() != x_t.values.rows() || eps.cols() != x_t.values.cols() || noise.rows() != eps.rows() ||
      noise.cols() != eps.cols()) {
    throw_dimension("sampler_step: latent, noise prediction and noise map must share a shape");
  }
  Latent out = x_t;
  out.values = posterior_mean(x_t.values, eps, c) + float(noise_scale(c)) * noise;
  out.timestep_tag = std::max(c.t_prev, 0);
  return out;
}

DenoiseSchedule bind_schedule(const DenoiseSchedule& schedule, const DenoiserBackend& backend) {
  if (schedule.base_timesteps != backend.base_timesteps()) {
    throw Error(ErrorKind::kIncompatibleSchedule,
                "schedule built for " + std::to_string(schedule.base_timesteps) + " base timesteps, backend " +
                    backend.id() + " has " + std::to_string(backend.base_timesteps()));
  }
  if (schedule.has_coefficients()) return schedule;
  return make_schedule(schedule.num_steps(), backend.noise_levels());
}

NoiseTrajectory invert(const Latent& z0, const DenoiseSchedule& schedule, DenoiserBackend& backend,
                       std::uint64_t seed) {
  const DenoiseSchedule sched = bind_schedule(schedule, backend);
  const int n = sched.num_steps();
  std::mt19937_64 rng(seed);

  // x_{t_k} = sqrt(abar) z0 + sqrt(1 - abar) eps_k, independent per step.
  std::vector<Planar> noisy(n);
  for (int k = 0; k < n; ++k) {
    const auto& c = sched.steps[k];
    noisy[k] = float(std::sqrt(c.alpha_bar)) * z0.values + float(std::sqrt(1.0 - c.alpha_bar)) * gaussian_like(z0.values, rng);
  }

  NoiseTrajectory traj;
  traj.schedule = sched;
  traj.backend_id = backend.id();
  traj.seed = seed;
  traj.source_hash = content_hash(z0);
  traj.terminal = z0;
  traj.terminal.values = noisy[0];
  traj.terminal.timestep_tag = sched.timestep_indices[0];
  traj.step_noises.reserve(n);

  Latent x = traj.terminal;
  for (int k = 0; k < n; ++k) {
    const auto& c = sched.steps[k];
    x.values = noisy[k];
    x.timestep_tag = c.t;
    const Planar eps = backend.predict_noise(x, c.t, nullptr);
    const Planar mu = posterior_mean(x.values, eps, c);
    const Planar& target = k + 1 < n ? noisy[k + 1] : z0.values;
    traj.step_noises.push_back((target - mu) / float(noise_scale(c)));
  }
  return traj;
}

Latent reconstruct(const NoiseTrajectory& traj, DenoiserBackend& backend, AttentionInterceptor* interceptor) {
  const DenoiseSchedule& sched = traj.schedule;
  if (traj.num_steps() != sched.num_steps() || !sched.has_coefficients()) {
    throw Error(ErrorKind::kMalformedTrajectory, "trajectory has " + std::to_string(traj.num_steps()) +
                                                     " noise maps for a " + std::to_string(sched.num_steps()) +
                                                     "-step schedule");
  }
  if (sched.base_timesteps != backend.base_timesteps()) {
    throw Error(ErrorKind::kIncompatibleSchedule, "trajectory schedule does not match backend " + backend.id());
  }
  Latent x = traj.terminal;
  for (int k = 0; k < sched.num_steps(); ++k) {
    const auto& c = sched.steps[k];
    const Planar eps = backend.predict_noise(x, c.t, interceptor);
    x = sampler_step(x, eps, c, traj.step_noises[k]);
  }
  x.timestep_tag = 0;
  return x;
}

TensorArchive to_archive(const NoiseTrajectory& traj) {
  TensorArchive a;
  a.metadata["kind"] = "noise-trajectory";
  a.metadata["backend_id"] = traj.backend_id;
  a.metadata["base_timesteps"] = std::to_string(traj.schedule.base_timesteps);
  a.metadata["timesteps"] = join_ints(traj.schedule.timestep_indices);
  a.metadata["seed"] = std::to_string(traj.seed);
  a.metadata["source_hash"] = hex64(traj.source_hash);
  a.metadata["latent_height"] = std::to_string(traj.terminal.height);
  a.metadata["latent_width"] = std::to_string(traj.terminal.width);
  a.put("terminal", traj.terminal.values);
  for (int k = 0; k < traj.num_steps(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "noise/%05d", k);
    a.put(name, traj.step_noises[k]);
  }
  // Coefficients are kept at full precision so cached and fresh replays agree bit for bit.
  std::string coeffs;
  char buf[160];
  for (const auto& c : traj.schedule.steps) {
    std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g;", c.t, c.t_prev, c.alpha_bar, c.alpha_bar_prev, c.sigma);
    coeffs += buf;
  }
  a.metadata["coefficients"] = coeffs;
  return a;
}

NoiseTrajectory trajectory_from_archive(const TensorArchive& a) {
  if (a.meta("kind") != "noise-trajectory") throw Error(ErrorKind::kIo, "archive is not a noise trajectory");
  NoiseTrajectory traj;
  traj.backend_id = a.meta("backend_id");
  traj.seed = std::stoull(a.meta("seed"));
  traj.source_hash = std::stoull(a.meta("source_hash"), nullptr, 16);
  traj.schedule.base_timesteps = std::stoi(a.meta("base_timesteps"));
  traj.schedule.timestep_indices = parse_ints(a.meta("timesteps"));
  traj.terminal.height = std::stoi(a.meta("latent_height"));
  traj.terminal.width = std::stoi(a.meta("latent_width"));
  traj.terminal.values = a.get_planar("terminal");
  if (!traj.schedule.timestep_indices.empty()) traj.terminal.timestep_tag = traj.schedule.timestep_indices.front();

  std::stringstream coeffs(a.meta("coefficients"));
  std::string entry;
  while (std::getline(coeffs, entry, ';')) {
    if (entry.empty()) continue;
    std::istringstream es(entry);
    StepCoefficients c;
    es >> c.t >> c.t_prev >> c.alpha_bar >> c.alpha_bar_prev >> c.sigma;
    if (!es) throw Error(ErrorKind::kMalformedTrajectory, "unreadable coefficient entry '" + entry + "'");
    traj.schedule.steps.push_back(c);
  }
  if (traj.schedule.steps.size() != traj.schedule.timestep_indices.size()) {
    throw Error(ErrorKind::kMalformedTrajectory, "coefficient table size mismatch");
  }
  for (std::size_t k = 0;; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "noise/%05zu", k);
    if (!a.tensors.count(name)) break;
    traj.step_noises.push_back(a.get_planar(name));
  }
  return traj;
}

void save_trajectory(const NoiseTrajectory& traj, const std::string& path) { to_archive(traj).save(path); }

NoiseTrajectory load_trajectory(const std::string& path) { return trajectory_from_archive(TensorArchive::load(path)); }

InversionCache::InversionCache(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create inversion cache " + dir_ + ": " + ec.message());
}

std::string InversionCache::path_for(const Latent& z0, const DenoiseSchedule& schedule,
                                     const DenoiserBackend& backend, std::uint64_t seed) const {
  Fnv1a h;
  h.update(backend.id());
  h.update_pod(schedule.base_timesteps);
  for (int t : schedule.timestep_indices) h.update_pod(t);
  h.update_pod(seed);
  h.update_pod(content_hash(z0));
  return (std::filesystem::path(dir_) / (hex64(h.digest()) + ".svta")).string();
}

NoiseTrajectory InversionCache::get_or_invert(const Latent& z0, const DenoiseSchedule& schedule,
                                              DenoiserBackend& backend, std::uint64_t seed) {
  const std::string path = path_for(z0, schedule, backend, seed);
  if (std::filesystem::exists(path)) {
    NoiseTrajectory traj = load_trajectory(path);
    if (traj.source_hash == content_hash(z0) && traj.backend_id == backend.id()) {
      ++hits_;
      return traj;
    }
  }
  ++misses_;
  NoiseTrajectory traj = invert(z0, schedule, backend, seed);
  save_trajectory(traj, path);
  return traj;
}

}  // namespace sdvicl
