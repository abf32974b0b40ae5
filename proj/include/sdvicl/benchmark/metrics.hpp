// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "sdvicl/tasks/tasks.hpp"

namespace sdvicl {

/// |pred & gt| / |pred | gt|, and 1 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

struct SemsegScores {
  double miou = 0;
  double accuracy = 0;
};

/// IoU averaged over classes present in gt; void gt pixels are excluded.
/// nullopt when every gt pixel is void.
std::optional<SemsegScores> semseg_scores(const ClassMap& pred, const ClassMap& gt, int num_classes);

struct KeypointScores {
  double mse = 0;
  double pck = 0;
};

/// Over visible gt points: squared distance to the matched prediction, or
/// the squared image diagonal when unmatched. PCK counts distances
/// <= pck_frac * norm_len. nullopt when gt has no visible point.
std::optional<KeypointScores> keypoint_scores(const KeypointSet& pred, const KeypointSet& gt, double norm_len,
                                              double pck_frac);

inline constexpr double kPckFraction = 0.1;

/// Reference length for PCK: the longer image side.
inline double pck_norm_length(const KeypointSet& gt) { return double(std::max(gt.height, gt.width)); }

double pixel_mse(const ImageRGB& pred, const ImageRGB& gt);

/// Pretrained-feature metrics plug in here.
class PerceptualBackend {
 public:
  virtual ~PerceptualBackend() = default;
  virtual std::string id() const = 0;
  /// Pairwise perceptual distance, 0 for identical images.
  virtual double distance(const ImageRGB& a, const ImageRGB& b) = 0;
  /// Global feature vector for distribution metrics.
  virtual Eigen::VectorXd features(const ImageRGB& img) = 0;
};

/// Handcrafted stand-in: channel-normalized colour and gradient maps at
/// three scales for the distance, pooled statistics for the features.
class GradientPerceptual final : public PerceptualBackend {
 public:
  std::string id() const override { return "gradient-stats-v1"; }
  double distance(const ImageRGB& a, const ImageRGB& b) override;
  Eigen::VectorXd features(const ImageRGB& img) override;
};

std::unique_ptr<PerceptualBackend> make_perceptual(const std::string& name);

struct PerceptualScores {
  std::optional<double> lpips;
  std::optional<double> fid;
  std::string backend_id;
  std::string skipped;  // non-empty explains a missing metric
  int pred_count = 0;
  int ref_count = 0;
};

/// Without a backend both metrics are reported as skipped, never as zero.
PerceptualScores perceptual_scores(std::span<const ImageRGB> pred_set, std::span<const ImageRGB> ref_set,
                                   PerceptualBackend* backend);

/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2);

/// Rows are samples. Uses the unbiased covariance; needs >= 2 rows per set.
double frechet_distance(const Eigen::MatrixXd& feats1, const Eigen::MatrixXd& feats2);

}  // namespace sdvicl
