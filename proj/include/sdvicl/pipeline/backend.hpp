// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdvicl/attention/attention.hpp"
#include "sdvicl/core/schedule.hpp"
#include "sdvicl/core/types.hpp"

namespace sdvicl {

/// Hook invoked at every self-attention site of a forward pass. Returning
/// a value replaces the site's feature update; nullopt keeps the standard one.
class AttentionInterceptor {
 public:
  virtual ~AttentionInterceptor() = default;
  virtual std::optional<HeadStackF> intercept(const AttentionTensors& at) = 0;
};

struct LatentShape {
  int channels = 4;
  int height = 64;
  int width = 64;
};

struct ForwardRequest {
  const Latent* latent = nullptr;
  int timestep = 0;
  AttentionInterceptor* interceptor = nullptr;
};

/// The pretrained latent diffusion model: an image autoencoder plus an
/// epsilon-predicting denoiser conditioned on the empty text prompt.
class DenoiserBackend {
 public:
  virtual ~DenoiserBackend() = default;

  virtual std::string id() const = 0;
  virtual const NoiseLevels& noise_levels() const = 0;
  int base_timesteps() const { return noise_levels().base_timesteps(); }

  /// Throws ErrorKind::kBackend for unsupported image sizes.
  virtual LatentShape latent_shape(int image_size) const = 0;
  virtual std::vector<AttentionSite> attention_sites(int image_size) const = 0;

  virtual Planar predict_noise(const Latent& z, int timestep, AttentionInterceptor* interceptor) = 0;

  /// Semantically identical to calling predict_noise on each request in order.
  virtual std::vector<Planar> predict_noise_batch(std::span<const ForwardRequest> requests) {
    std::vector<Planar> out;
    out.reserve(requests.size());
    for (const auto& r : requests) out.push_back(predict_noise(*r.latent, r.timestep, r.interceptor));
    return out;
  }

  virtual Latent encode(const ImageRGB& img) = 0;
  virtual ImageRGB decode(const Latent& z) = 0;
};

/// Backends compiled into this build, by name ("stub").
std::vector<std::string> available_backends();
std::unique_ptr<DenoiserBackend> make_backend(const std::string& name);

}  // namespace sdvicl
