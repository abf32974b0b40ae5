// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "sdvicl/pipeline/backend.hpp"

namespace sdvicl {

/// Deterministic CPU stand-in for the pretrained model, small enough for
/// unit tests yet structurally faithful where the method needs it:
///
///  * a three-level U-Net over latent tokens with an encoder self-attention
///    site and two decoder self-attention sites per level (nominal
///    resolutions 16, 32, 64 for a 64x64 latent);
///  * multi-head Q/K/V projections whose keys match on latent content, so
///    recomputed attention actually transports prompt-target values;
///  * an epsilon head that equals the Gaussian-prior (Wiener) denoiser when
///    every attention update is the identity;
///  * a linear autoencoder: 8x8 average pooling with a fixed 4x3 colour
///    mix, decoded by pseudo-inverse and bilinear upsampling.
///
/// Weights are drawn once from `seed`; all arithmetic is float32.
class StubBackend final : public DenoiserBackend {
 public:
  struct Options {
    int latent_channels = 4;
    int feature_dim = 8;
    int heads = 2;
    double qk_gain = 2.0;
    double mix = 0.5;       // weight of the attention update in the residual blend
    double data_std = 1.0;  // prior std of clean latents for the Wiener head
    std::uint64_t seed = 1234;
    int base_timesteps = 1000;
  };

  StubBackend();
  explicit StubBackend(Options opts);

  std::string id() const override;
  const NoiseLevels& noise_levels() const override { return levels_; }
  LatentShape latent_shape(int image_size) const override;
  std::vector<AttentionSite> attention_sites(int image_size) const override;
  Planar predict_noise(const Latent& z, int timestep, AttentionInterceptor* interceptor) override;
  Latent encode(const ImageRGB& img) override;
  ImageRGB decode(const Latent& z) override;

  const Options& options() const { return opts_; }
  static constexpr int kDownsample = 8;

 private:
  struct SiteWeights {
    AttentionSite site;
    MatrixT<float> wq, wk, wv, wo;  // feature_dim x feature_dim
  };

  MatrixT<float> attend(const SiteWeights& sw, const MatrixT<float>& f, int timestep,
                        AttentionInterceptor* interceptor) const;

  Options opts_;
  NoiseLevels levels_;
  MatrixT<float> w_in_;   // feature_dim x channels, orthonormal columns
  MatrixT<float> w_out_;  // channels x feature_dim
  MatrixT<float> color_mix_;      // channels x 3
  MatrixT<float> color_unmix_;    // 3 x channels
  std::vector<SiteWeights> sites_;  // encoder site first, then decoder sites in depth order
};

}  // namespace sdvicl
