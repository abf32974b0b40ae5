// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "sdvicl/core/error.hpp"

namespace sdvicl {

/// Channel-major planar storage: one row per channel, one column per pixel
/// in raster order (y * width + x).
template <typename Scalar>
using PlanarT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Planar = PlanarT<float>;

/// RGB image with values in [0, 1].
template <typename Scalar>
struct ImageRGBT {
  int height = 0;
  int width = 0;
  PlanarT<Scalar> pixels;  // 3 x (height * width)

  ImageRGBT() = default;
  ImageRGBT(int h, int w) : height(h), width(w), pixels(PlanarT<Scalar>::Zero(3, Eigen::Index(h) * w)) {}

  Scalar& at(int c, int y, int x) { return pixels(c, Eigen::Index(y) * width + x); }
  Scalar at(int c, int y, int x) const { return pixels(c, Eigen::Index(y) * width + x); }

  bool in_range() const {
    return pixels.size() == 0 || (pixels.minCoeff() >= Scalar(0) && pixels.maxCoeff() <= Scalar(1));
  }
};

using ImageRGB = ImageRGBT<float>;

/// A latent tensor of the autoencoder space, tagged with the diffusion
/// timestep index it currently sits at (0 = clean).
template <typename Scalar>
struct LatentT {
  int height = 0;
  int width = 0;
  PlanarT<Scalar> values;  // channels x (height * width)
  int timestep_tag = 0;

  LatentT() = default;
  LatentT(int channels, int h, int w, int tag = 0)
      : height(h), width(w), values(PlanarT<Scalar>::Zero(channels, Eigen::Index(h) * w)), timestep_tag(tag) {}

  int channels() const { return static_cast<int>(values.rows()); }
  bool same_shape(const LatentT& o) const {
    return height == o.height && width == o.width && values.rows() == o.values.rows();
  }
  bool all_finite() const { return values.allFinite(); }
};

using Latent = LatentT<float>;

/// Per-pixel integer labels, height x width.
using IndexMap = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
std::string shape_string(const LatentT<Scalar>& z) {
  return std::to_string(z.channels()) + "x" + std::to_string(z.height) + "x" + std::to_string(z.width);
}

/// Role of one denoising path inside an episode.
struct PathId {
  enum class Role { kPromptImage, kPromptTarget, kQuery, kPrediction };

  Role role = Role::kQuery;
  int index = 0;  // 1-based prompt index for prompt roles, 0 otherwise

  static PathId prompt_image(int i) { return {Role::kPromptImage, i}; }
  static PathId prompt_target(int i) { return {Role::kPromptTarget, i}; }
  static PathId query() { return {Role::kQuery, 0}; }
  static PathId prediction() { return {Role::kPrediction, 0}; }

  std::string name() const;
  friend bool operator==(const PathId&, const PathId&) = default;
  friend auto operator<=>(const PathId&, const PathId&) = default;
};

}  // namespace sdvicl
