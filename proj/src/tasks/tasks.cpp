// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/tasks/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "sdvicl/io/image_io.hpp"

namespace sdvicl {
namespace {

using FloatMap = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[noreturn]] void bad_annotation(const std::string& what) { throw Error(ErrorKind::kAnnotation, what); }

ImageRGB gray_image(const FloatMap& v) {
  ImageRGB img(int(v.rows()), int(v.cols()));
  for (int c = 0; c < 3; ++c) img.pixels.row(c) = Eigen::Map<const Eigen::RowVectorXf>(v.data(), v.size());
  return img;
}

ImageRGB encode_mask(const BinaryMask& m) {
  FloatMap v = m.cast<float>();
  return gray_image(v);
}

BinaryMask threshold(const ImageRGB& img) {
  BinaryMask m(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) m(y, x) = luminance(img, y, x) > kMaskThreshold;
  }
  return m;
}

void check_box(const Detection& d) {
  if (!d.box) return;
  const BBox& b = *d.box;
  if (b.x0 < 0 || b.y0 < 0 || b.x1 >= d.width || b.y1 >= d.height || b.x0 > b.x1 || b.y0 > b.y1) {
    bad_annotation("box (" + std::to_string(b.x0) + "," + std::to_string(b.y0) + ")-(" + std::to_string(b.x1) + "," +
                   std::to_string(b.y1) + ") outside a " + std::to_string(d.width) + "x" +
                   std::to_string(d.height) + " canvas");
  }
}

ImageRGB encode_classes(const ClassMap& cm) {
  const Palette pal = make_palette(std::max(cm.num_classes, 1));
  ImageRGB img(int(cm.ids.rows()), int(cm.ids.cols()));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int id = cm.ids(y, x);
      if (id == kIgnoreLabel) continue;  // background stays black
      if (id < 0 || id >= cm.num_classes) bad_annotation("class id " + std::to_string(id) + " out of range");
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = pal.colors[id][c];
    }
  }
  return img;
}

ImageRGB encode_keypoints(const KeypointSet& kps) {
  ImageRGB img(kps.height, kps.width);
  for (const auto& p : kps.points) {
    if (!p.visible) continue;
    if (!(p.x >= 0 && p.y >= 0 && p.x <= kps.width - 1 && p.y <= kps.height - 1)) {
      bad_annotation("keypoint outside the canvas");
    }
    const int channel = p.group == KeypointGroup::kFace ? 0 : 1;
    const double sigma = keypoint_sigma(p.group, kps.height, kps.width);
    const int r = int(std::ceil(4.0 * sigma));
    const int y0 = std::max(0, int(std::floor(p.y)) - r), y1 = std::min(kps.height - 1, int(std::ceil(p.y)) + r);
    const int x0 = std::max(0, int(std::floor(p.x)) - r), x1 = std::min(kps.width - 1, int(std::ceil(p.x)) + r);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
        img.at(channel, y, x) += float(std::exp(-d2 / (2.0 * sigma * sigma)));
      }
    }
  }
  img.pixels = img.pixels.cwiseMin(1.0f);
  return img;
}

Detection decode_box(const ImageRGB& img) {
  Detection det{img.height, img.width, std::nullopt};
  const BinaryMask m = threshold(img);
  cv::Mat bin(img.height, img.width, CV_8UC1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) bin.at<uchar>(y, x) = m(y, x) ? 255 : 0;
  }
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(bin, labels, stats, centroids, 8, CV_32S);
  int best = 0, best_area = 0;
  for (int i = 1; i < n; ++i) {
    const int area = stats.at<int>(i, cv::CC_STAT_AREA);
    if (area > best_area) best = i, best_area = area;
  }
  if (best == 0) return det;
  const int left = stats.at<int>(best, cv::CC_STAT_LEFT), top = stats.at<int>(best, cv::CC_STAT_TOP);
  det.box = BBox{left, top, left + stats.at<int>(best, cv::CC_STAT_WIDTH) - 1,
                 top + stats.at<int>(best, cv::CC_STAT_HEIGHT) - 1};
  return det;
}

ClassMap decode_classes(const ImageRGB& img, int num_classes) {
  if (num_classes < 1) throw ConfigError("num_classes", "semantic segmentation decode needs the palette size");
  const Palette pal = make_palette(num_classes);
  ClassMap cm{IndexMap(img.height, img.width), num_classes};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      auto dist = [&](const std::array<float, 3>& col) {
        float d = 0;
        for (int c = 0; c < 3; ++c) d += (img.at(c, y, x) - col[c]) * (img.at(c, y, x) - col[c]);
        return d;
      };
      int best = kIgnoreLabel;
      float best_d = dist(pal.background);
      for (int k = 0; k < num_classes; ++k) {
        const float d = dist(pal.colors[k]);
        if (d < best_d) best = k, best_d = d;
      }
      cm.ids(y, x) = best;
    }
  }
  return cm;
}

void channel_peaks(const ImageRGB& img, int channel, KeypointGroup group, std::vector<Keypoint>& out) {
  const double sigma = keypoint_sigma(group, img.height, img.width);
  const int r = std::max(1, int(std::lround(sigma)));
  cv::Mat v(img.height, img.width, CV_32FC1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) v.at<float>(y, x) = img.at(channel, y, x);
  }
  cv::Mat dil;
  cv::dilate(v, dil, cv::getStructuringElement(cv::MORPH_RECT, cv::Size(2 * r + 1, 2 * r + 1)));
  struct Cand {
    float v;
    int y, x;
  };
  std::vector<Cand> cands;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const float val = v.at<float>(y, x);
      if (val > kPeakThreshold && val >= dil.at<float>(y, x)) cands.push_back({val, y, x});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.v > b.v; });
  const double min_sep2 = 4.0 * sigma * sigma;  // suppress within 2 sigma
  std::vector<Cand> kept;
  for (const auto& c : cands) {
    bool clear = true;
    for (const auto& k : kept) {
      if (double(c.x - k.x) * (c.x - k.x) + double(c.y - k.y) * (c.y - k.y) < min_sep2) {
        clear = false;
        break;
      }
    }
    if (clear) kept.push_back(c);
  }
  for (const auto& k : kept) out.push_back({double(k.x), double(k.y), true, group});
}

}  // namespace

TaskKind task_of(const TaskAnnotation& ann) {
  constexpr TaskKind kinds[] = {TaskKind::kForegroundSegmentation, TaskKind::kSingleObjectDetection,
                                TaskKind::kSemanticSegmentation,   TaskKind::kKeypointDetection,
                                TaskKind::kEdgeDetection,          TaskKind::kColorization};
  return kinds[ann.index()];
}

Palette make_palette(int num_classes) {
  if (num_classes < 1) throw ConfigError("num_classes", "palette needs at least one class");
  Palette pal;
  for (int k = 0; k < num_classes; ++k) {
    const double h = 6.0 * k / num_classes;  // sector units
    const int sector = int(std::floor(h)) % 6;
    const double f = h - std::floor(h);
    const float up = float(f), down = float(1.0 - f);
    std::array<float, 3> rgb{};
    switch (sector) {
      case 0: rgb = {1, up, 0}; break;
      case 1: rgb = {down, 1, 0}; break;
      case 2: rgb = {0, 1, up}; break;
      case 3: rgb = {0, down, 1}; break;
      case 4: rgb = {up, 0, 1}; break;
      default: rgb = {1, 0, down}; break;
    }
    pal.colors.push_back(rgb);
  }
  return pal;
}

double keypoint_sigma(KeypointGroup group, int height, int width) {
  const double base = group == KeypointGroup::kFace ? kSigmaFace : kSigmaBody;
  return base * std::max(height, width) / 512.0;
}

float luminance(const ImageRGB& img, int y, int x) {
  return 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
}

ImageRGB encode_target(const TaskAnnotation& ann) {
  struct Visitor {
    ImageRGB operator()(const BinaryMask& m) const { return encode_mask(m); }
    ImageRGB operator()(const Detection& d) const {
      check_box(d);
      return encode_mask(box_mask(d));
    }
    ImageRGB operator()(const ClassMap& cm) const { return encode_classes(cm); }
    ImageRGB operator()(const KeypointSet& k) const { return encode_keypoints(k); }
    ImageRGB operator()(const EdgeMap& e) const {
      if (e.values.size() && (e.values.minCoeff() < 0.0f || e.values.maxCoeff() > 1.0f)) {
        bad_annotation("edge strengths must lie in [0, 1]");
      }
      return gray_image(e.values);
    }
    ImageRGB operator()(const ColorImage& c) const {
      if (!c.image.in_range()) bad_annotation("colour target outside [0, 1]");
      return c.image;
    }
  };
  return std::visit(Visitor{}, ann);
}

TaskAnnotation decode_prediction(TaskKind task, const ImageRGB& img, int num_classes) {
  switch (task) {
    case TaskKind::kForegroundSegmentation: return threshold(img);
    case TaskKind::kSingleObjectDetection: return decode_box(img);
    case TaskKind::kSemanticSegmentation: return decode_classes(img, num_classes);
    case TaskKind::kKeypointDetection: {
      KeypointSet kps{img.height, img.width, {}};
      channel_peaks(img, 0, KeypointGroup::kFace, kps.points);
      channel_peaks(img, 1, KeypointGroup::kBody, kps.points);
      return kps;
    }
    case TaskKind::kEdgeDetection: {
      EdgeMap e;
      const Eigen::RowVectorXf mean = img.pixels.colwise().mean();
      e.values = Eigen::Map<const FloatMap>(mean.data(), img.height, img.width).cwiseMax(0.0f).cwiseMin(1.0f);
      return e;
    }
    case TaskKind::kColorization: return ColorImage{img};
  }
  throw ConfigError("task", "unknown task");
}

std::vector<std::pair<int, int>> match_keypoints(const KeypointSet& pred, const KeypointSet& gt) {
  auto d2 = [](const Keypoint& a, const Keypoint& b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); };
  auto nearest = [&](const Keypoint& from, const std::vector<Keypoint>& set, bool visible_only) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < int(set.size()); ++i) {
      if (set[i].group != from.group || (visible_only && !set[i].visible)) continue;
      const double d = d2(from, set[i]);
      if (d < best_d) best = i, best_d = d;
    }
    return best;
  };
  std::vector<std::pair<int, int>> pairs;
  for (int g = 0; g < int(gt.points.size()); ++g) {
    if (!gt.points[g].visible) continue;
    const int p = nearest(gt.points[g], pred.points, false);
    if (p >= 0 && nearest(pred.points[p], gt.points, true) == g) pairs.emplace_back(g, p);
  }
  return pairs;
}

BinaryMask box_mask(const Detection& det) {
  BinaryMask m = BinaryMask::Constant(det.height, det.width, false);
  if (det.box) {
    check_box(det);
    const BBox& b = *det.box;
    m.block(b.y0, b.x0, b.y1 - b.y0 + 1, b.x1 - b.x0 + 1).setConstant(true);
  }
  return m;
}

ImageRGB task_query(TaskKind task, const ImageRGB& img) {
  return task == TaskKind::kColorization ? to_grayscale(img) : img;
}

Detection read_box(const std::string& path, int height, int width) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read box file " + path);
  Detection det{height, width, std::nullopt};
  BBox b;
  if (in >> b.x0 >> b.y0 >> b.x1 >> b.y1) det.box = b;
  check_box(det);
  return det;
}

void write_box(const Detection& det, const std::string& path) {
  std::ofstream out(path);
  if (det.box) out << det.box->x0 << ' ' << det.box->y0 << ' ' << det.box->x1 << ' ' << det.box->y1 << '\n';
  if (!out) throw Error(ErrorKind::kIo, "cannot write box file " + path);
}

KeypointSet read_keypoints(const std::string& path, int height, int width) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read keypoint file " + path);
  KeypointSet kps{height, width, {}};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Keypoint p;
    int visible = 0;
    std::string group;
    if (!(ls >> p.x >> p.y >> visible >> group)) bad_annotation("malformed keypoint record '" + line + "' in " + path);
    if (group != "face" && group != "body") bad_annotation("keypoint group must be face or body in " + path);
    p.visible = visible != 0;
    p.group = group == "face" ? KeypointGroup::kFace : KeypointGroup::kBody;
    kps.points.push_back(p);
  }
  return kps;
}

void write_keypoints(const KeypointSet& kps, const std::string& path) {
  std::ofstream out(path);
  for (const auto& p : kps.points) {
    out << p.x << ' ' << p.y << ' ' << (p.visible ? 1 : 0) << ' '
        << (p.group == KeypointGroup::kFace ? "face" : "body") << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "cannot write keypoint file " + path);
}

}  // namespace sdvicl
