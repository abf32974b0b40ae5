// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdvicl/core/task_kind.hpp"
#include "sdvicl/core/types.hpp"

namespace sdvicl {

using BinaryMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Inclusive pixel corners.
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int area() const { return (x1 - x0 + 1) * (y1 - y0 + 1); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// One box on a height x width canvas; empty when nothing was detected.
struct Detection {
  int height = 0;
  int width = 0;
  std::optional<BBox> box;
};

inline constexpr int kIgnoreLabel = 255;

struct ClassMap {
  IndexMap ids;  // kIgnoreLabel marks void pixels
  int num_classes = 0;
};

enum class KeypointGroup { kFace, kBody };

struct Keypoint {
  double x = 0;
  double y = 0;
  bool visible = true;
  KeypointGroup group = KeypointGroup::kBody;
};

struct KeypointSet {
  int height = 0;
  int width = 0;
  std::vector<Keypoint> points;
};

struct EdgeMap {
  using Values = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Values values;  // [0, 1]
};

struct ColorImage {
  ImageRGB image;
};

using TaskAnnotation = std::variant<BinaryMask, Detection, ClassMap, KeypointSet, EdgeMap, ColorImage>;

TaskKind task_of(const TaskAnnotation& ann);

struct Palette {
  std::vector<std::array<float, 3>> colors;
  std::array<float, 3> background{0.0f, 0.0f, 0.0f};
};

/// K hues equally spaced from 0 degrees at full saturation and value.
Palette make_palette(int num_classes);

/// Gaussian widths at 512 x 512; scaled with the longer image side.
inline constexpr double kSigmaFace = 4.0;
inline constexpr double kSigmaBody = 8.0;
double keypoint_sigma(KeypointGroup group, int height, int width);

inline constexpr float kMaskThreshold = 0.5f;
inline constexpr float kPeakThreshold = 0.3f;

float luminance(const ImageRGB& img, int y, int x);

/// Throws ErrorKind::kAnnotation for out-of-bounds coordinates or class ids.
ImageRGB encode_target(const TaskAnnotation& ann);

/// `num_classes` is the palette size for semantic segmentation; other tasks ignore it.
TaskAnnotation decode_prediction(TaskKind task, const ImageRGB& img, int num_classes = 0);

/// Pairs (gt index, pred index) of mutual nearest neighbours within each group.
/// Invisible gt points are never matched.
std::vector<std::pair<int, int>> match_keypoints(const KeypointSet& pred, const KeypointSet& gt);

BinaryMask box_mask(const Detection& det);

/// Query image for a task: the grayscale version for colorization, the image otherwise.
ImageRGB task_query(TaskKind task, const ImageRGB& img);

/// Structured text records. Boxes: one line "x0 y0 x1 y1" (empty file = no box).
/// Keypoints: one line per point, "x y visible face|body".
Detection read_box(const std::string& path, int height, int width);
void write_box(const Detection& det, const std::string& path);
KeypointSet read_keypoints(const std::string& path, int height, int width);
void write_keypoints(const KeypointSet& kps, const std::string& path);

}  // namespace sdvicl
