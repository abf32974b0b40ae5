// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/io/image_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace sdvicl {
namespace {

cv::Mat to_mat(const ImageRGB& img) {
  cv::Mat m(img.height, img.width, CV_32FC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = m.ptr<cv::Vec3f>(y);
    for (int x = 0; x < img.width; ++x) row[x] = cv::Vec3f(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
  }
  return m;
}

ImageRGB from_mat(const cv::Mat& m) {
  ImageRGB img(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3f>(y);
    for (int x = 0; x < m.cols; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[x][c];
    }
  }
  return img;
}

int interpolation(Resample mode) {
  switch (mode) {
    case Resample::kArea: return cv::INTER_AREA;
    case Resample::kBilinear: return cv::INTER_LINEAR;
    case Resample::kNearest: return cv::INTER_NEAREST;
  }
  return cv::INTER_LINEAR;
}

void write_atomic(const std::string& path, const std::vector<uchar>& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename onto " + path + ": " + ec.message());
}

cv::Mat read_raw(const std::string& path, int flags) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::kIo, "no such file: " + path);
  cv::Mat m = cv::imread(path, flags);
  if (m.empty()) throw Error(ErrorKind::kIo, "cannot decode image " + path);
  return m;
}

}  // namespace

CropGeometry square_crop_geometry(int height, int width, int size) {
  if (height <= 0 || width <= 0 || size <= 0) throw_dimension("square_crop: empty image or size");
  const double s = double(size) / std::min(height, width);
  CropGeometry g;
  g.scaled_height = std::max(size, int(std::lround(height * s)));
  g.scaled_width = std::max(size, int(std::lround(width * s)));
  g.y0 = (g.scaled_height - size) / 2;
  g.x0 = (g.scaled_width - size) / 2;
  return g;
}

ImageRGB load_image(const std::string& path) {
  cv::Mat raw = read_raw(path, cv::IMREAD_COLOR);
  cv::Mat rgb, f;
  cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
  rgb.convertTo(f, CV_32FC3, 1.0 / 255.0);
  return from_mat(f);
}

void save_image(const ImageRGB& img, const std::string& path) {
  cv::Mat f = to_mat(img), u8, bgr;
  f.convertTo(u8, CV_8UC3, 255.0);  // saturating, so out-of-range values clamp
  cv::cvtColor(u8, bgr, cv::COLOR_RGB2BGR);
  std::vector<uchar> bytes;
  if (!cv::imencode(".png", bgr, bytes)) throw Error(ErrorKind::kIo, "png encoding failed for " + path);
  write_atomic(path, bytes);
}

IndexMap load_index_map(const std::string& path) {
  cv::Mat m = read_raw(path, cv::IMREAD_UNCHANGED);
  if (m.channels() != 1) {
    cv::Mat gray;
    cv::cvtColor(m, gray, m.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
    m = gray;
  }
  cv::Mat ints;
  m.convertTo(ints, CV_32S);
  IndexMap ids(ints.rows, ints.cols);
  for (int y = 0; y < ints.rows; ++y) {
    for (int x = 0; x < ints.cols; ++x) ids(y, x) = ints.at<int>(y, x);
  }
  return ids;
}

void save_index_map(const IndexMap& ids, const std::string& path) {
  if (ids.size() && (ids.minCoeff() < 0 || ids.maxCoeff() > 65535)) {
    throw Error(ErrorKind::kAnnotation, "index map values must lie in [0, 65535]");
  }
  const bool wide = ids.size() && ids.maxCoeff() > 255;
  cv::Mat m(int(ids.rows()), int(ids.cols()), wide ? CV_16UC1 : CV_8UC1);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      if (wide) m.at<std::uint16_t>(y, x) = std::uint16_t(ids(y, x));
      else m.at<uchar>(y, x) = uchar(ids(y, x));
    }
  }
  std::vector<uchar> bytes;
  if (!cv::imencode(".png", m, bytes)) throw Error(ErrorKind::kIo, "png encoding failed for " + path);
  write_atomic(path, bytes);
}

ImageRGB resize(const ImageRGB& img, int height, int width, Resample mode) {
  if (height <= 0 || width <= 0) throw_dimension("resize: target must be positive");
  if (height == img.height && width == img.width) return img;
  cv::Mat out;
  cv::resize(to_mat(img), out, cv::Size(width, height), 0, 0, interpolation(mode));
  return from_mat(out);
}

ImageRGB square_crop(const ImageRGB& img, int size, Resample mode) {
  const CropGeometry g = square_crop_geometry(img.height, img.width, size);
  ImageRGB scaled = resize(img, g.scaled_height, g.scaled_width, mode);
  const int y0 = g.y0, x0 = g.x0;
  ImageRGB out(size, size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) out.at(c, y, x) = scaled.at(c, y + y0, x + x0);
    }
  }
  return out;
}

IndexMap square_crop(const IndexMap& ids, int size) {
  const CropGeometry g = square_crop_geometry(int(ids.rows()), int(ids.cols()), size);
  cv::Mat m(int(ids.rows()), int(ids.cols()), CV_32SC1);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) m.at<int>(y, x) = ids(y, x);
  }
  cv::Mat scaled;
  cv::resize(m, scaled, cv::Size(g.scaled_width, g.scaled_height), 0, 0, cv::INTER_NEAREST);
  const int y0 = g.y0, x0 = g.x0;
  IndexMap out(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) out(y, x) = scaled.at<int>(y + y0, x + x0);
  }
  return out;
}

ImageRGB to_grayscale(const ImageRGB& img) {
  ImageRGB out(img.height, img.width);
  const Eigen::RowVectorXf luma = 0.299f * img.pixels.row(0) + 0.587f * img.pixels.row(1) + 0.114f * img.pixels.row(2);
  for (int c = 0; c < 3; ++c) out.pixels.row(c) = luma;
  return out;
}

double psnr(const ImageRGB& a, const ImageRGB& b) {
  if (a.height != b.height || a.width != b.width) throw_dimension("psnr: image shapes differ");
  const double mse = (a.pixels - b.pixels).cast<double>().array().square().mean();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace sdvicl
