// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "sdvicl/core/types.hpp"

namespace sdvicl {

/// 8-bit gray or colour raster, returned as RGB in [0, 1]. Throws kIo.
ImageRGB load_image(const std::string& path);

/// Lossless PNG, 8 bits per channel. Values are clamped to [0, 1].
void save_image(const ImageRGB& img, const std::string& path);

/// Single-channel integer raster (indexed masks and class maps).
IndexMap load_index_map(const std::string& path);
void save_index_map(const IndexMap& ids, const std::string& path);

enum class Resample { kArea, kBilinear, kNearest };

ImageRGB resize(const ImageRGB& img, int height, int width, Resample mode = Resample::kBilinear);

/// Where square_crop takes its window: the scaled image size and the window origin.
struct CropGeometry {
  int scaled_height = 0;
  int scaled_width = 0;
  int y0 = 0;
  int x0 = 0;
};
CropGeometry square_crop_geometry(int height, int width, int size);

/// Scales the shorter side to `size` and center-crops to size x size.
ImageRGB square_crop(const ImageRGB& img, int size, Resample mode = Resample::kArea);

IndexMap square_crop(const IndexMap& ids, int size);

/// Rec. 601 luma replicated into all three channels.
ImageRGB to_grayscale(const ImageRGB& img);

/// Peak signal-to-noise ratio in dB for [0, 1] images; infinity when equal.
double psnr(const ImageRGB& a, const ImageRGB& b);

}  // namespace sdvicl
