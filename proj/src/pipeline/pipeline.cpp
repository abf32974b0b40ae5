// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "sdvicl/guidance/guidance.hpp"

namespace sdvicl {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool contains_site(const std::vector<AttentionSite>& sites, const AttentionSite& s) {
  return std::find(sites.begin(), sites.end(), s) != sites.end();
}

struct SiteRecord {
  HeadStackF q, k, v;
};

/// Keeps Q/K/V at the recomputation sites; never alters the forward.
class RecordingInterceptor final : public AttentionInterceptor {
 public:
  explicit RecordingInterceptor(const std::vector<AttentionSite>* sites) : sites_(sites) {}

  std::optional<HeadStackF> intercept(const AttentionTensors& at) override {
    if (contains_site(*sites_, at.site)) records[at.site.layer_index] = SiteRecord{at.q, at.k, at.v};
    return std::nullopt;
  }

  std::map<int, SiteRecord> records;

 private:
  const std::vector<AttentionSite>* sites_;
};

/// Replaces the prediction path's self-attention at the selected sites.
class RecomputeInterceptor final : public AttentionInterceptor {
 public:
  RecomputeInterceptor(const std::vector<AttentionSite>* sites, const VICLConfig* cfg,
                       const RecordingInterceptor* query, const std::vector<RecordingInterceptor>* images,
                       const std::vector<RecordingInterceptor>* targets, AttentionCapture* capture, int step)
      : sites_(sites), cfg_(cfg), query_(query), images_(images), targets_(targets), capture_(capture), step_(step) {}

  std::optional<HeadStackF> intercept(const AttentionTensors& at) override {
    if (!contains_site(*sites_, at.site)) return std::nullopt;
    const int layer = at.site.layer_index;
    const bool query_from_c =
        cfg_->variant == AttentionVariant::kQueryC_KeyA || cfg_->variant == AttentionVariant::kQueryC_KeyB;
    const bool key_from_a =
        cfg_->variant == AttentionVariant::kQueryC_KeyA || cfg_->variant == AttentionVariant::kQueryD_KeyA;

    const HeadStackF& q = query_from_c ? query_->records.at(layer).q : at.q;
    std::vector<HeadStackF> keys, values;
    keys.reserve(images_->size());
    values.reserve(targets_->size());
    for (std::size_t i = 0; i < images_->size(); ++i) {
      keys.push_back(key_from_a ? (*images_)[i].records.at(layer).k : (*targets_)[i].records.at(layer).k);
      values.push_back((*targets_)[i].records.at(layer).v);
    }
    const std::span<const HeadStackF> ks(keys), vs(values);
    if (cfg_->ensemble == EnsembleMode::kFeatureEnsemble) {
      return feature_ensemble_update(q, ks, vs, cfg_->tau, cfg_->beta);
    }
    if (capture_ && capture_->wants(at.site, step_)) {
      AttentionMap alpha;
      HeadStackF out = vicl_update(q, ks, vs, cfg_->tau, cfg_->beta, &alpha);
      capture_->record(at.site, step_, alpha);
      return out;
    }
    return vicl_update(q, ks, vs, cfg_->tau, cfg_->beta);
  }

 private:
  const std::vector<AttentionSite>* sites_;
  const VICLConfig* cfg_;
  const RecordingInterceptor* query_;
  const std::vector<RecordingInterceptor>* images_;
  const std::vector<RecordingInterceptor>* targets_;
  AttentionCapture* capture_;
  int step_;
};

Latent adain_target(const std::vector<Latent>& targets) {
  return mean_latent<float>(std::span<const Latent>(targets));
}

void check_finite(const Latent& z, int step, const std::string& path) {
  if (!z.all_finite()) throw DivergenceError(step, path);
}

}  // namespace

const char* to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kForegroundSegmentation: return "fgseg";
    case TaskKind::kSingleObjectDetection: return "detection";
    case TaskKind::kSemanticSegmentation: return "semseg";
    case TaskKind::kKeypointDetection: return "keypoints";
    case TaskKind::kEdgeDetection: return "edges";
    case TaskKind::kColorization: return "colorization";
  }
  return "?";
}

TaskKind parse_task(const std::string& text) {
  for (auto t : {TaskKind::kForegroundSegmentation, TaskKind::kSingleObjectDetection, TaskKind::kSemanticSegmentation,
                 TaskKind::kKeypointDetection, TaskKind::kEdgeDetection, TaskKind::kColorization}) {
    if (text == to_string(t)) return t;
  }
  throw ConfigError("task", "unknown task '" + text + "'");
}

Latent encode(const ImageRGB& img, DenoiserBackend& backend) {
  if (img.height != img.width) throw Error(ErrorKind::kBackend, "only square images are supported");
  const LatentShape shape = backend.latent_shape(img.height);
  Latent z = backend.encode(img);
  if (z.channels() != shape.channels || z.height != shape.height || z.width != shape.width) {
    throw Error(ErrorKind::kBackend, "backend returned a latent of shape " + shape_string(z));
  }
  return z;
}

ImageRGB decode(const Latent& z, DenoiserBackend& backend) { return backend.decode(z); }

std::uint64_t path_seed(std::uint64_t episode_seed, const Latent& z0) {
  Fnv1a h;
  h.update_pod(episode_seed);
  h.update_pod(content_hash(z0));
  return h.digest();
}

EpisodeState prepare_episode(const PromptEpisode& ep, DenoiserBackend& backend, const RunOptions& opts,
                             EpisodeTrace* trace) {
  const VICLConfig cfg = validate_config(ep.config);
  if (ep.prompts.empty()) throw Error(ErrorKind::kEmptyPrompt, "episode has no prompt pairs");
  auto check_size = [&](const ImageRGB& img, const std::string& what) {
    if (img.height != cfg.image_size || img.width != cfg.image_size) {
      throw_dimension(what + " is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                      ", expected " + std::to_string(cfg.image_size) + " square");
    }
  };
  check_size(ep.query, "query image");
  for (std::size_t i = 0; i < ep.prompts.size(); ++i) {
    check_size(ep.prompts[i].image, "prompt image " + std::to_string(i + 1));
    check_size(ep.prompts[i].target, "prompt target " + std::to_string(i + 1));
  }

  EpisodeState st;
  st.schedule = make_schedule(cfg.steps, backend.noise_levels());
  const auto all_sites = backend.attention_sites(cfg.image_size);
  st.vicl_sites = select_sites(all_sites, cfg.resolutions);

  auto t0 = Clock::now();
  const Latent zc = encode(ep.query, backend);
  std::vector<Latent> za, zb;
  for (const auto& p : ep.prompts) {
    za.push_back(encode(p.image, backend));
    zb.push_back(encode(p.target, backend));
  }
  const double encode_s = seconds_since(t0);

  t0 = Clock::now();
  std::map<std::uint64_t, NoiseTrajectory> memo;
  auto invert_path = [&](const Latent& z) -> const NoiseTrajectory& {
    const std::uint64_t key = content_hash(z);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const std::uint64_t seed = path_seed(cfg.seed, z);
    NoiseTrajectory traj =
        opts.cache ? opts.cache->get_or_invert(z, st.schedule, backend, seed) : invert(z, st.schedule, backend, seed);
    return memo.emplace(key, std::move(traj)).first->second;
  };
  st.query_traj = invert_path(zc);
  for (std::size_t i = 0; i < za.size(); ++i) {
    st.prompt_image_traj.push_back(invert_path(za[i]));
    st.prompt_target_traj.push_back(invert_path(zb[i]));
  }
  const double invert_s = seconds_since(t0);

  st.query = st.query_traj.terminal;
  for (const auto& t : st.prompt_image_traj) st.prompt_images.push_back(t.terminal);
  for (const auto& t : st.prompt_target_traj) st.prompt_targets.push_back(t.terminal);
  st.prediction = st.query_traj.terminal;
  if (cfg.reuse_query_noise || !cfg.vicl_enabled) {
    st.prediction_noises = st.query_traj.step_noises;
  } else {
    Fnv1a h;
    h.update_pod(cfg.seed);
    h.update("prediction-noise");
    std::mt19937_64 rng(h.digest());
    std::normal_distribution<float> nd(0.0f, 1.0f);
    for (int k = 0; k < st.total_steps(); ++k) {
      Planar n(zc.values.rows(), zc.values.cols());
      for (Eigen::Index i = 0; i < n.size(); ++i) n.data()[i] = nd(rng);
      st.prediction_noises.push_back(std::move(n));
    }
  }

  if (trace) {
    trace->config = cfg;
    trace->backend_id = backend.id();
    trace->timings.encode_s = encode_s;
    trace->timings.invert_s = invert_s;
    trace->trajectories["C"] = st.query_traj;
    trace->input_hashes["C"] = hex64(content_hash(ep.query));
    for (std::size_t i = 0; i < ep.prompts.size(); ++i) {
      const std::string n = std::to_string(i + 1);
      trace->trajectories["A" + n] = st.prompt_image_traj[i];
      trace->trajectories["B" + n] = st.prompt_target_traj[i];
      trace->input_hashes["A" + n] = hex64(content_hash(ep.prompts[i].image));
      trace->input_hashes["B" + n] = hex64(content_hash(ep.prompts[i].target));
      trace->prompt_ids.push_back(ep.prompts[i].id);
    }
  }
  return st;
}

void run_step(EpisodeState& st, DenoiserBackend& backend, const VICLConfig& cfg, AttentionCapture* capture) {
  if (st.done()) throw Error(ErrorKind::kConfig, "episode already fully denoised");
  const int k = st.step;
  const int step_no = k + 1;
  const StepCoefficients& c = st.schedule.steps[k];
  const std::size_t n = st.prompt_images.size();

  if (cfg.vicl_enabled && cfg.adain && cfg.adain_before_forward) {
    st.prediction = adain_or_identity(st.prediction, adain_target(st.prompt_targets));
  }

  std::vector<RecordingInterceptor> rec_a(n, RecordingInterceptor(&st.vicl_sites));
  std::vector<RecordingInterceptor> rec_b(n, RecordingInterceptor(&st.vicl_sites));
  RecordingInterceptor rec_c(&st.vicl_sites);

  std::vector<ForwardRequest> batch;
  batch.reserve(2 * n + 2);
  for (std::size_t i = 0; i < n; ++i) batch.push_back({&st.prompt_images[i], c.t, &rec_a[i]});
  for (std::size_t i = 0; i < n; ++i) batch.push_back({&st.prompt_targets[i], c.t, &rec_b[i]});
  batch.push_back({&st.query, c.t, &rec_c});
  batch.push_back({&st.prediction, c.t, nullptr});

  std::vector<Planar> eps;
  const double w = swap_weight(st.t(), st.total_steps(), cfg.gamma);
  const bool need_modified = cfg.vicl_enabled && (w != 0.0 || capture != nullptr);
  RecomputeInterceptor recompute(&st.vicl_sites, &cfg, &rec_c, &rec_a, &rec_b, capture, k);
  try {
    eps = backend.predict_noise_batch(batch);
    if (need_modified) {
      const ForwardRequest mod{&st.prediction, c.t, &recompute};
      eps.push_back(backend.predict_noise_batch(std::span<const ForwardRequest>(&mod, 1)).front());
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kBackend) throw;
    throw Error(ErrorKind::kBackend, "step " + std::to_string(step_no) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kBackend, "step " + std::to_string(step_no) + ": " + e.what());
  }

  NoisePrediction eta_default{eps[2 * n + 1], NoisePrediction::Source::kDefault, c.t};
  NoisePrediction eta = eta_default;
  if (need_modified) {
    NoisePrediction eta_modified{eps[2 * n + 2], NoisePrediction::Source::kModified, c.t};
    eta = swap_guide(eta_default, eta_modified, st.t(), st.total_steps(), cfg.gamma);
  }

  for (std::size_t i = 0; i < n; ++i) {
    st.prompt_images[i] = sampler_step(st.prompt_images[i], eps[i], c, st.prompt_image_traj[i].step_noises[k]);
    st.prompt_targets[i] = sampler_step(st.prompt_targets[i], eps[n + i], c, st.prompt_target_traj[i].step_noises[k]);
  }
  st.query = sampler_step(st.query, eps[2 * n], c, st.query_traj.step_noises[k]);
  st.prediction = sampler_step(st.prediction, eta.eta, c, st.prediction_noises[k]);

  if (cfg.vicl_enabled && cfg.adain && !cfg.adain_before_forward) {
    st.prediction = adain_or_identity(st.prediction, adain_target(st.prompt_targets));
  }

  for (std::size_t i = 0; i < n; ++i) {
    check_finite(st.prompt_images[i], step_no, PathId::prompt_image(int(i) + 1).name());
    check_finite(st.prompt_targets[i], step_no, PathId::prompt_target(int(i) + 1).name());
  }
  check_finite(st.query, step_no, "C");
  check_finite(st.prediction, step_no, "D");
  ++st.step;
}

EpisodeResult run_episode(const PromptEpisode& ep, DenoiserBackend& backend, const RunOptions& opts) {
  const auto start = Clock::now();
  EpisodeResult result;
  EpisodeTrace& trace = result.trace;
  EpisodeState st = prepare_episode(ep, backend, opts, &trace);
  const VICLConfig& cfg = trace.config;

  auto t0 = Clock::now();
  while (!st.done()) {
    run_step(st, backend, cfg, opts.capture);
    if (opts.keep_snapshots) {
      std::map<std::string, Latent> snap;
      for (std::size_t i = 0; i < st.prompt_images.size(); ++i) {
        snap["A" + std::to_string(i + 1)] = st.prompt_images[i];
        snap["B" + std::to_string(i + 1)] = st.prompt_targets[i];
      }
      snap["C"] = st.query;
      snap["D"] = st.prediction;
      trace.snapshots.push_back(std::move(snap));
    }
  }
  trace.timings.denoise_s = seconds_since(t0);

  t0 = Clock::now();
  trace.prediction_latent = st.prediction;
  trace.prediction = decode(st.prediction, backend);
  trace.timings.decode_s = seconds_since(t0);
  trace.timings.total_s = seconds_since(start);
  result.prediction = trace.prediction;
  return result;
}

}  // namespace sdvicl
