// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sdvicl/attention/capture.hpp"
#include "sdvicl/core/config.hpp"
#include "sdvicl/core/task_kind.hpp"
#include "sdvicl/inversion/inversion.hpp"
#include "sdvicl/pipeline/backend.hpp"

namespace sdvicl {

struct PromptPair {
  ImageRGB image;   // A_i
  ImageRGB target;  // B_i
  std::string id;
};

struct PromptEpisode {
  ImageRGB query;  // C
  std::vector<PromptPair> prompts;
  TaskKind task = TaskKind::kForegroundSegmentation;
  VICLConfig config;
  std::string query_id;
};

struct StageTimings {
  double encode_s = 0;
  double invert_s = 0;
  double denoise_s = 0;
  double decode_s = 0;
  double total_s = 0;
};

struct EpisodeTrace {
  std::map<std::string, NoiseTrajectory> trajectories;  // keyed by path name (A1, B1, C)
  std::vector<std::map<std::string, Latent>> snapshots; // per step, when requested
  Latent prediction_latent;
  ImageRGB prediction;
  StageTimings timings;
  VICLConfig config;
  std::string backend_id;
  std::vector<std::string> prompt_ids;
  std::map<std::string, std::string> input_hashes;  // path name -> image content hash
};

/// Per-path latents while an episode is being denoised.
struct EpisodeState {
  DenoiseSchedule schedule;
  std::vector<AttentionSite> vicl_sites;
  std::vector<NoiseTrajectory> prompt_image_traj;   // A_i
  std::vector<NoiseTrajectory> prompt_target_traj;  // B_i
  NoiseTrajectory query_traj;                       // C
  std::vector<Planar> prediction_noises;            // D's per-step noise maps

  std::vector<Latent> prompt_images;
  std::vector<Latent> prompt_targets;
  Latent query;
  Latent prediction;
  int step = 0;  // index of the next step to run

  int total_steps() const { return schedule.num_steps(); }
  /// The descending step counter t of the guidance schedule (T at the first step).
  int t() const { return total_steps() - step; }
  bool done() const { return step >= total_steps(); }
};

struct RunOptions {
  InversionCache* cache = nullptr;
  AttentionCapture* capture = nullptr;
  bool keep_snapshots = false;
};

Latent encode(const ImageRGB& img, DenoiserBackend& backend);
ImageRGB decode(const Latent& z, DenoiserBackend& backend);

/// Seed for one path's inversion noise, derived from the episode seed and
/// the image content so duplicated or reordered prompts invert identically.
std::uint64_t path_seed(std::uint64_t episode_seed, const Latent& z0);

/// Encodes and inverts every image and initializes the prediction path from
/// the query's terminal latent (and, by default, the query's noise maps).
EpisodeState prepare_episode(const PromptEpisode& ep, DenoiserBackend& backend, const RunOptions& opts = {},
                             EpisodeTrace* trace = nullptr);

/// Advances every path by one sampler step. A_i, B_i and C replay their own
/// trajectories with unmodified attention; D is predicted twice (default and
/// recomputed attention), blended by swap guidance and AdaIN-aligned to the
/// mean prompt-target latent.
void run_step(EpisodeState& state, DenoiserBackend& backend, const VICLConfig& cfg,
              AttentionCapture* capture = nullptr);

struct EpisodeResult {
  ImageRGB prediction;
  EpisodeTrace trace;
};

EpisodeResult run_episode(const PromptEpisode& ep, DenoiserBackend& backend, const RunOptions& opts = {});

}  // namespace sdvicl
