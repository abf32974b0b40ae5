// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/benchmark/metrics.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "sdvicl/io/image_io.hpp"

namespace sdvicl {
namespace {

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw_dimension(std::string(what) + ": shapes differ");
}

using Maps = std::vector<Eigen::MatrixXd>;

// Colour channels plus luma gradients, each unit-normalized across
// channels at every pixel.
Maps perceptual_maps(const ImageRGB& img) {
  Maps maps;
  Eigen::MatrixXd luma(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) luma(y, x) = luminance(img, y, x);
  }
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd m(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) m(y, x) = img.at(c, y, x) - 0.5;
    }
    maps.push_back(m);
  }
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(img.height, img.width), gy = gx;
  if (img.width > 1) gx.leftCols(img.width - 1) = luma.rightCols(img.width - 1) - luma.leftCols(img.width - 1);
  if (img.height > 1) gy.topRows(img.height - 1) = luma.bottomRows(img.height - 1) - luma.topRows(img.height - 1);
  maps.push_back(gx);
  maps.push_back(gy);

  Eigen::MatrixXd norm = Eigen::MatrixXd::Constant(img.height, img.width, 1e-10);
  for (const auto& m : maps) norm.array() += m.array().square();
  norm = norm.array().sqrt();
  for (auto& m : maps) m = m.array() / norm.array();
  return maps;
}

}  // namespace

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "iou");
  const auto inter = (pred && gt).count();
  const auto uni = (pred || gt).count();
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

std::optional<SemsegScores> semseg_scores(const ClassMap& pred, const ClassMap& gt, int num_classes) {
  require_same_shape(pred.ids, gt.ids, "semseg_scores");
  if (num_classes < 1) throw ConfigError("num_classes", "must be positive");
  // Column num_classes collects predictions outside the label set (including void).
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(num_classes, num_classes + 1);
  for (Eigen::Index i = 0; i < gt.ids.size(); ++i) {
    const int g = gt.ids.data()[i];
    if (g == kIgnoreLabel) continue;
    if (g < 0 || g >= num_classes) throw Error(ErrorKind::kAnnotation, "gt class id out of range");
    const int p = pred.ids.data()[i];
    confusion(g, (p >= 0 && p < num_classes) ? p : num_classes) += 1.0;
  }
  const double total = confusion.sum();
  if (total == 0.0) return std::nullopt;
  double iou_sum = 0;
  int present = 0;
  for (int k = 0; k < num_classes; ++k) {
    const double gt_count = confusion.row(k).sum();
    if (gt_count == 0.0) continue;
    const double tp = confusion(k, k);
    const double pred_count = confusion.col(k).sum();
    iou_sum += tp / (gt_count + pred_count - tp);
    ++present;
  }
  return SemsegScores{iou_sum / present, confusion.leftCols(num_classes).diagonal().sum() / total};
}

std::optional<KeypointScores> keypoint_scores(const KeypointSet& pred, const KeypointSet& gt, double norm_len,
                                              double pck_frac) {
  std::vector<int> match(gt.points.size(), -1);
  for (const auto& [g, p] : match_keypoints(pred, gt)) match[g] = p;
  const double diag2 = double(gt.width) * gt.width + double(gt.height) * gt.height;
  const double radius = pck_frac * norm_len;
  double se = 0;
  int n = 0, correct = 0;
  for (std::size_t g = 0; g < gt.points.size(); ++g) {
    if (!gt.points[g].visible) continue;
    ++n;
    if (match[g] < 0) {
      se += diag2;
      continue;
    }
    const auto& p = pred.points[match[g]];
    const double d2 = (p.x - gt.points[g].x) * (p.x - gt.points[g].x) + (p.y - gt.points[g].y) * (p.y - gt.points[g].y);
    se += d2;
    if (std::sqrt(d2) <= radius) ++correct;
  }
  if (n == 0) return std::nullopt;
  return KeypointScores{se / n, double(correct) / n};
}

double pixel_mse(const ImageRGB& pred, const ImageRGB& gt) {
  if (pred.height != gt.height || pred.width != gt.width) throw_dimension("pixel_mse: image shapes differ");
  return (pred.pixels - gt.pixels).cast<double>().array().square().mean();
}

double GradientPerceptual::distance(const ImageRGB& a, const ImageRGB& b) {
  if (a.height != b.height || a.width != b.width) throw_dimension("perceptual distance: image shapes differ");
  double total = 0;
  ImageRGB xa = a, xb = b;
  constexpr int kScales = 3;
  for (int s = 0; s < kScales; ++s) {
    const Maps ma = perceptual_maps(xa), mb = perceptual_maps(xb);
    double d = 0;
    for (std::size_t c = 0; c < ma.size(); ++c) d += (ma[c] - mb[c]).array().square().mean();
    total += d;
    if (xa.height < 4 || xa.width < 4) break;
    xa = resize(xa, xa.height / 2, xa.width / 2, Resample::kArea);
    xb = resize(xb, xb.height / 2, xb.width / 2, Resample::kArea);
  }
  return total / kScales;
}

Eigen::VectorXd GradientPerceptual::features(const ImageRGB& img) {
  const Maps maps = perceptual_maps(img);
  Eigen::VectorXd f(2 * maps.size() + 3);
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const double mean = maps[c].mean();
    f(2 * c) = mean;
    f(2 * c + 1) = std::sqrt((maps[c].array() - mean).square().mean());
  }
  for (int c = 0; c < 3; ++c) f(2 * maps.size() + c) = img.pixels.row(c).cast<double>().mean();
  return f;
}

std::unique_ptr<PerceptualBackend> make_perceptual(const std::string& name) {
  if (name == "gradient") return std::make_unique<GradientPerceptual>();
  throw Error(ErrorKind::kBackend, "perceptual backend '" + name + "' is not available in this build");
}

PerceptualScores perceptual_scores(std::span<const ImageRGB> pred_set, std::span<const ImageRGB> ref_set,
                                   PerceptualBackend* backend) {
  PerceptualScores out;
  out.pred_count = int(pred_set.size());
  out.ref_count = int(ref_set.size());
  if (!backend) {
    out.skipped = "no perceptual backend configured";
    return out;
  }
  out.backend_id = backend->id();
  if (pred_set.empty() || ref_set.empty()) {
    out.skipped = "empty image set";
    return out;
  }
  if (pred_set.size() == ref_set.size()) {
    double sum = 0;
    for (std::size_t i = 0; i < pred_set.size(); ++i) sum += backend->distance(pred_set[i], ref_set[i]);
    out.lpips = sum / double(pred_set.size());
  } else {
    out.skipped = "lpips needs aligned sets";
  }
  if (pred_set.size() < 2 || ref_set.size() < 2) {
    out.skipped += (out.skipped.empty() ? "" : "; ") + std::string("fid needs at least two images per set");
    return out;
  }
  auto stack = [&](std::span<const ImageRGB> set) {
    Eigen::MatrixXd m;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const Eigen::VectorXd f = backend->features(set[i]);
      if (i == 0) m.resize(Eigen::Index(set.size()), f.size());
      m.row(Eigen::Index(i)) = f.transpose();
    }
    return m;
  };
  out.fid = frechet_distance(stack(pred_set), stack(ref_set));
  return out;
}

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2) {
  if (mu1.size() != mu2.size() || s1.rows() != mu1.size() || s2.rows() != mu2.size() || s1.cols() != s1.rows() ||
      s2.cols() != s2.rows()) {
    throw_dimension("frechet_distance: moment shapes disagree");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(0.5 * (s1 + s1.transpose()));
  const Eigen::MatrixXd root1 =
      e1.eigenvectors() * e1.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * e1.eigenvectors().transpose();
  const Eigen::MatrixXd m = root1 * s2 * root1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const double tr_root = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_root;
}

double frechet_distance(const Eigen::MatrixXd& feats1, const Eigen::MatrixXd& feats2) {
  if (feats1.rows() < 2 || feats2.rows() < 2) throw ConfigError("fid", "needs at least two samples per set");
  if (feats1.cols() != feats2.cols()) throw_dimension("frechet_distance: feature sizes differ");
  auto moments = [](const Eigen::MatrixXd& f, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
    mu = f.colwise().mean().transpose();
    const Eigen::MatrixXd c = f.rowwise() - mu.transpose();
    cov = c.transpose() * c / double(f.rows() - 1);
  };
  Eigen::VectorXd mu1, mu2;
  Eigen::MatrixXd c1, c2;
  moments(feats1, mu1, c1);
  moments(feats2, mu2, c2);
  return frechet_distance(mu1, c1, mu2, c2);
}

}  // namespace sdvicl
