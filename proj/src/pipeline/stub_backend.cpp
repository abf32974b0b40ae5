// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/pipeline/stub_backend.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sdvicl {
namespace {

MatrixT<float> gaussian(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixT<float> m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = static_cast<float>(scale * nd(rng));
  return m;
}

MatrixT<float> orthonormal_columns(std::mt19937_64& rng, int rows, int cols) {
  Eigen::MatrixXd g = gaussian(rng, rows, cols, 1.0).cast<double>();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  return q.cast<float>();
}

/// 2x2 average pooling of a feature map stored F x (h*w).
MatrixT<float> pool2(const MatrixT<float>& f, int h, int w) {
  const int h2 = h / 2, w2 = w / 2;
  MatrixT<float> out(f.rows(), Eigen::Index(h2) * w2);
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x) {
      const Eigen::Index a = Eigen::Index(2 * y) * w + 2 * x;
      out.col(Eigen::Index(y) * w2 + x) = 0.25f * (f.col(a) + f.col(a + 1) + f.col(a + w) + f.col(a + w + 1));
    }
  return out;
}

/// Nearest-neighbour 2x upsampling.
MatrixT<float> up2(const MatrixT<float>& f, int h, int w) {
  const int h2 = h * 2, w2 = w * 2;
  MatrixT<float> out(f.rows(), Eigen::Index(h2) * w2);
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x) out.col(Eigen::Index(y) * w2 + x) = f.col(Eigen::Index(y / 2) * w + x / 2);
  return out;
}

}  // namespace

StubBackend::StubBackend() : StubBackend(Options{}) {}

StubBackend::StubBackend(Options opts) : opts_(opts) {
  if (opts_.feature_dim % opts_.heads != 0) throw ConfigError("heads", "feature_dim must divide evenly into heads");
  levels_ = NoiseLevels::scaled_linear(opts_.base_timesteps);
  std::mt19937_64 rng(opts_.seed);
  const int f = opts_.feature_dim;
  w_in_ = orthonormal_columns(rng, f, opts_.latent_channels);
  w_out_ = w_in_.transpose();

  color_mix_.resize(opts_.latent_channels, 3);
  const float k = 1.2f;
  const float base[4][3] = {{0.577350f, 0.577350f, 0.577350f},
                            {0.707107f, -0.707107f, 0.0f},
                            {0.408248f, 0.408248f, -0.816497f},
                            {0.5f, 0.3f, 0.2f}};
  for (int c = 0; c < opts_.latent_channels; ++c)
    for (int j = 0; j < 3; ++j) color_mix_(c, j) = k * base[c % 4][j];
  Eigen::MatrixXf m = color_mix_.cast<float>();
  color_unmix_ = (m.transpose() * m).ldlt().solve(m.transpose());

  // Encoder site at the coarsest level, then two decoder sites per level
  // from coarse to fine.
  auto make_site = [&](bool decoder, int index, int level) {
    SiteWeights sw;
    sw.site = AttentionSite{decoder, index, 64 >> level};
    const MatrixT<float> r = orthonormal_columns(rng, f, f);
    sw.wq = float(opts_.qk_gain) * r;
    sw.wk = float(opts_.qk_gain) * r;
    sw.wv = MatrixT<float>::Identity(f, f) + gaussian(rng, f, f, 0.05);
    sw.wo = MatrixT<float>::Identity(f, f) + gaussian(rng, f, f, 0.05);
    return sw;
  };
  sites_.push_back(make_site(false, 0, 2));
  int index = 1;
  for (int level = 2; level >= 0; --level) {
    sites_.push_back(make_site(true, index++, level));
    sites_.push_back(make_site(true, index++, level));
  }
}

std::string StubBackend::id() const {
  return "stub-unet-f" + std::to_string(opts_.feature_dim) + "h" + std::to_string(opts_.heads) + "-s" +
         std::to_string(opts_.seed);
}

LatentShape StubBackend::latent_shape(int image_size) const {
  if (image_size <= 0 || image_size % (kDownsample * 4) != 0) {
    throw Error(ErrorKind::kBackend,
                "stub backend needs image sizes divisible by 32, got " + std::to_string(image_size));
  }
  return {opts_.latent_channels, image_size / kDownsample, image_size / kDownsample};
}

std::vector<AttentionSite> StubBackend::attention_sites(int image_size) const {
  latent_shape(image_size);
  std::vector<AttentionSite> out;
  for (const auto& sw : sites_) out.push_back(sw.site);
  return out;
}

MatrixT<float> StubBackend::attend(const SiteWeights& sw, const MatrixT<float>& f, int timestep,
                                   AttentionInterceptor* interceptor) const {
  const int heads = opts_.heads;
  const int d = opts_.feature_dim / heads;
  const MatrixT<float> q = (sw.wq * f).transpose();
  const MatrixT<float> k = (sw.wk * f).transpose();
  const MatrixT<float> v = (sw.wv * f).transpose();
  AttentionTensors at;
  at.site = sw.site;
  at.timestep = timestep;
  for (int h = 0; h < heads; ++h) {
    at.q.heads.push_back(q.middleCols(h * d, d));
    at.k.heads.push_back(k.middleCols(h * d, d));
    at.v.heads.push_back(v.middleCols(h * d, d));
  }
  std::optional<HeadStackF> replaced;
  if (interceptor) replaced = interceptor->intercept(at);
  const HeadStackF delta = replaced ? std::move(*replaced) : standard_update(at);
  if (delta.num_heads() != heads || delta.tokens() != f.cols() || delta.dim() != d) {
    throw_dimension("attention update at " + sw.site.name() + " has the wrong shape");
  }
  MatrixT<float> merged(f.cols(), opts_.feature_dim);
  for (int h = 0; h < heads; ++h) merged.middleCols(h * d, d) = delta.heads[h];
  const float mix = float(opts_.mix);
  return (1.0f - mix) * f + mix * (sw.wo * merged.transpose());
}

Planar StubBackend::predict_noise(const Latent& z, int timestep, AttentionInterceptor* interceptor) {
  if (z.channels() != opts_.latent_channels || z.height % 4 != 0 || z.width % 4 != 0 || z.height <= 0) {
    throw Error(ErrorKind::kBackend, "stub backend cannot denoise a latent of shape " + shape_string(z));
  }
  if (timestep < 0 || timestep >= levels_.base_timesteps()) {
    throw Error(ErrorKind::kBackend, "timestep " + std::to_string(timestep) + " outside the training schedule");
  }
  const double ab = levels_.alphas_cumprod[timestep];
  const double s2 = opts_.data_std * opts_.data_std;
  const double c_in = 1.0 / std::sqrt(ab * s2 + (1.0 - ab));

  const int h0 = z.height, w0 = z.width;
  const int h1 = h0 / 2, w1 = w0 / 2, h2 = h1 / 2, w2 = w1 / 2;
  const MatrixT<float> f0 = w_in_ * (float(c_in) * z.values);
  const MatrixT<float> f1 = pool2(f0, h0, w0);
  MatrixT<float> f2 = pool2(f1, h1, w1);

  std::size_t s = 0;
  f2 = attend(sites_[s++], f2, timestep, interceptor);

  MatrixT<float> g = f2;
  g = attend(sites_[s++], g, timestep, interceptor);
  g = attend(sites_[s++], g, timestep, interceptor);
  g = 0.5f * (up2(g, h2, w2) + f1);
  g = attend(sites_[s++], g, timestep, interceptor);
  g = attend(sites_[s++], g, timestep, interceptor);
  g = 0.5f * (up2(g, h1, w1) + f0);
  g = attend(sites_[s++], g, timestep, interceptor);
  g = attend(sites_[s++], g, timestep, interceptor);

  const float gain = float(std::sqrt(ab) * s2 * c_in);
  const Planar x0_hat = gain * (w_out_ * g);
  return (z.values - float(std::sqrt(ab)) * x0_hat) / float(std::sqrt(1.0 - ab));
}

Latent StubBackend::encode(const ImageRGB& img) {
  if (img.height != img.width) throw Error(ErrorKind::kBackend, "stub backend expects square images");
  const LatentShape shape = latent_shape(img.height);
  const int h = shape.height, w = shape.width, f = kDownsample;
  Planar pooled = Planar::Zero(3, Eigen::Index(h) * w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) pooled(c, Eigen::Index(y / f) * w + x / f) += img.at(c, y, x);
  pooled = pooled.array() / float(f * f) * 2.0f - 1.0f;
  Latent z(shape.channels, h, w, 0);
  z.values = color_mix_ * pooled;
  return z;
}

ImageRGB StubBackend::decode(const Latent& z) {
  if (z.channels() != opts_.latent_channels) throw Error(ErrorKind::kBackend, "decode: wrong latent channel count");
  const int h = z.height, w = z.width, f = kDownsample;
  const Planar rgb = color_unmix_ * z.values;
  ImageRGB img(h * f, w * f);
  // Bilinear upsampling with half-pixel centres, edges clamped.
  for (int y = 0; y < img.height; ++y) {
    const float sy = std::clamp((y + 0.5f) / f - 0.5f, 0.0f, float(h - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, h - 1);
    const float ty = sy - y0;
    for (int x = 0; x < img.width; ++x) {
      const float sx = std::clamp((x + 0.5f) / f - 0.5f, 0.0f, float(w - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, w - 1);
      const float tx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const float a = rgb(c, Eigen::Index(y0) * w + x0), b = rgb(c, Eigen::Index(y0) * w + x1);
        const float cc = rgb(c, Eigen::Index(y1) * w + x0), d = rgb(c, Eigen::Index(y1) * w + x1);
        const float v = (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * cc + tx * d);
        img.at(c, y, x) = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
      }
    }
  }
  return img;
}

std::vector<std::string> available_backends() { return {"stub"}; }

std::unique_ptr<DenoiserBackend> make_backend(const std::string& name) {
  if (name == "stub") return std::make_unique<StubBackend>();
  std::string known;
  for (const auto& n : available_backends()) known += " " + n;
  throw Error(ErrorKind::kBackend, "backend '" + name + "' is not compiled into this build (available:" + known + ")");
}

}  // namespace sdvicl
