// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/benchmark/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sdvicl/core/archive.hpp"
#include "sdvicl/io/image_io.hpp"

namespace fs = std::filesystem;

namespace sdvicl {
namespace {

bool uses_class_pools(TaskKind task) {
  return task == TaskKind::kForegroundSegmentation || task == TaskKind::kSingleObjectDetection ||
         task == TaskKind::kSemanticSegmentation;
}

BinaryMask crop_mask(const BinaryMask& m, int size) {
  const IndexMap ids = square_crop(IndexMap(m.cast<int>()), size);
  return ids != 0;
}

Detection tight_box(const BinaryMask& m) {
  Detection d{int(m.rows()), int(m.cols()), std::nullopt};
  int x0 = INT32_MAX, y0 = INT32_MAX, x1 = -1, y1 = -1;
  for (int y = 0; y < m.rows(); ++y) {
    for (int x = 0; x < m.cols(); ++x) {
      if (!m(y, x)) continue;
      x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
    }
  }
  if (x1 >= 0) d.box = BBox{x0, y0, x1, y1};
  return d;
}

TaskAnnotation crop_annotation(const TaskAnnotation& ann, int src_h, int src_w, int size, const ImageRGB& cropped) {
  const CropGeometry g = square_crop_geometry(src_h, src_w, size);
  switch (task_of(ann)) {
    case TaskKind::kForegroundSegmentation: return crop_mask(std::get<BinaryMask>(ann), size);
    case TaskKind::kSingleObjectDetection: return tight_box(crop_mask(box_mask(std::get<Detection>(ann)), size));
    case TaskKind::kSemanticSegmentation: {
      const auto& cm = std::get<ClassMap>(ann);
      return ClassMap{square_crop(cm.ids, size), cm.num_classes};
    }
    case TaskKind::kKeypointDetection: {
      KeypointSet out = std::get<KeypointSet>(ann);
      const double sx = double(g.scaled_width) / src_w, sy = double(g.scaled_height) / src_h;
      out.height = out.width = size;
      for (auto& p : out.points) {
        p.x = (p.x + 0.5) * sx - 0.5 - g.x0;
        p.y = (p.y + 0.5) * sy - 0.5 - g.y0;
        if (p.x < 0 || p.y < 0 || p.x > size - 1 || p.y > size - 1) {
          p.visible = false;
          p.x = std::clamp(p.x, 0.0, double(size - 1));
          p.y = std::clamp(p.y, 0.0, double(size - 1));
        }
      }
      return out;
    }
    case TaskKind::kEdgeDetection: {
      const auto& e = std::get<EdgeMap>(ann);
      ImageRGB img(int(e.values.rows()), int(e.values.cols()));
      for (int c = 0; c < 3; ++c) img.pixels.row(c) = Eigen::Map<const Eigen::RowVectorXf>(e.values.data(), e.values.size());
      const ImageRGB c = square_crop(img, size, Resample::kArea);
      EdgeMap out;
      out.values = Eigen::Map<const EdgeMap::Values>(c.pixels.row(0).eval().data(), size, size).cwiseMax(0.f).cwiseMin(1.f);
      return out;
    }
    case TaskKind::kColorization: return ColorImage{cropped};
  }
  return ann;
}

std::uint64_t mix(std::uint64_t seed, const std::string& s) {
  Fnv1a h;
  h.update_pod(seed);
  h.update(s);
  return h.digest();
}

}  // namespace

std::vector<int> seeded_sample(int n, int k, std::uint64_t seed) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  k = std::clamp(k, 0, n);
  for (int i = 0; i < k; ++i) {
    const int j = i + int(rng() % std::uint64_t(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// ---------------------------------------------------------------------------
// Folder layout

FolderDataset::FolderDataset(std::string name, std::string root, int num_classes)
    : name_(std::move(name)), root_(std::move(root)), num_classes_(num_classes) {
  if (!fs::is_directory(root_)) throw Error(ErrorKind::kIo, "dataset root not found: " + root_);
}

std::string FolderDataset::split_path(const std::string& split, bool pool) const {
  return (fs::path(root_) / "splits" / (split + (pool ? ".pool.txt" : ".txt"))).string();
}

std::vector<DatasetEntry> FolderDataset::read_split(const std::string& path) const {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "split file not found: " + path);
  std::vector<DatasetEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    DatasetEntry e;
    if (!(ls >> e.id)) continue;
    if (!(ls >> e.class_id)) e.class_id = -1;
    if (!(ls >> e.instances)) e.instances = 1;
    out.push_back(e);
  }
  return out;
}

std::vector<DatasetEntry> FolderDataset::entries(const std::string& split) const {
  return read_split(split_path(split, false));
}

std::vector<DatasetEntry> FolderDataset::pool(const std::string& split) const {
  const std::string p = split_path(split, true);
  return fs::exists(p) ? read_split(p) : entries(split);
}

std::string FolderDataset::pool_description(const std::string& split) const {
  const std::string p = split_path(split, true);
  return fs::exists(p) ? p : split_path(split, false) + " (query split doubles as pool)";
}

ImageRGB FolderDataset::image(const std::string& id) const {
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    const fs::path p = fs::path(root_) / "images" / (id + ext);
    if (fs::exists(p)) return load_image(p.string());
  }
  throw Error(ErrorKind::kIo, "no image for id '" + id + "' under " + root_ + "/images");
}

TaskAnnotation FolderDataset::annotation(const std::string& id, TaskKind task) const {
  const fs::path dir = fs::path(root_) / "annotations";
  auto dims = [&] {
    const ImageRGB img = image(id);
    return std::pair{img.height, img.width};
  };
  switch (task) {
    case TaskKind::kForegroundSegmentation: {
      const IndexMap ids = load_index_map((dir / (id + ".png")).string());
      return BinaryMask(ids != 0);
    }
    case TaskKind::kSingleObjectDetection: {
      const auto [h, w] = dims();
      return read_box((dir / (id + ".box.txt")).string(), h, w);
    }
    case TaskKind::kSemanticSegmentation: {
      ClassMap cm{load_index_map((dir / (id + ".png")).string()), num_classes_};
      for (Eigen::Index i = 0; i < cm.ids.size(); ++i) {
        int& v = cm.ids.data()[i];
        if (v < 0 || v >= num_classes_) v = kIgnoreLabel;
      }
      return cm;
    }
    case TaskKind::kKeypointDetection: {
      const auto [h, w] = dims();
      return read_keypoints((dir / (id + ".kp.txt")).string(), h, w);
    }
    case TaskKind::kEdgeDetection: {
      const ImageRGB e = load_image((dir / (id + ".png")).string());
      EdgeMap out;
      const Eigen::RowVectorXf mean = e.pixels.colwise().mean();
      out.values = Eigen::Map<const EdgeMap::Values>(mean.data(), e.height, e.width);
      return out;
    }
    case TaskKind::kColorization: return ColorImage{image(id)};
  }
  throw ConfigError("task", "unknown task");
}

// ---------------------------------------------------------------------------
// Synthetic shapes

struct SyntheticDataset::Scene {
  int cls = 0;
  int instances = 1;
  double cx[2] = {0, 0}, cy[2] = {0, 0}, r[2] = {0, 0};
  std::array<float, 3> bg0{}, bg1{}, fg{};
  double stripe = 0;

  bool inside(int k, double x, double y) const {
    const double dx = x - cx[k], dy = y - cy[k];
    switch (cls) {
      case 0: return dx * dx + dy * dy <= r[k] * r[k];
      case 1: return std::abs(dx) <= r[k] && std::abs(dy) <= r[k];
      default: return dy <= r[k] && dy >= -r[k] && std::abs(dx) <= (dy + r[k]) * 0.5;
    }
  }
  bool inside_any(double x, double y) const {
    for (int k = 0; k < instances; ++k) {
      if (inside(k, x, y)) return true;
    }
    return false;
  }
};

SyntheticDataset::SyntheticDataset(int count, int size, std::uint64_t seed) : count_(count), size_(size), seed_(seed) {
  if (count < 2 || size < 16) throw ConfigError("synthetic", "needs at least 2 images of at least 16 px");
}

SyntheticDataset::Scene SyntheticDataset::scene(const std::string& id) const {
  int index = -1;
  if (std::sscanf(id.c_str(), "syn-%d", &index) != 1 || index < 0 || index >= count_) {
    throw Error(ErrorKind::kIo, "unknown synthetic image id '" + id + "'");
  }
  std::mt19937_64 rng(mix(seed_, id));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Scene s;
  s.cls = index % 3;
  s.instances = index % 5 == 4 ? 2 : 1;
  for (int k = 0; k < 2; ++k) {
    s.r[k] = size_ * (k == 0 ? 0.16 + 0.1 * u(rng) : 0.08);
    s.cx[k] = size_ * (k == 0 ? 0.35 + 0.3 * u(rng) : 0.15);
    s.cy[k] = size_ * (k == 0 ? 0.35 + 0.3 * u(rng) : 0.15);
  }
  for (auto* c : {&s.bg0, &s.bg1}) {
    for (auto& v : *c) v = float(0.15 + 0.35 * u(rng));
  }
  for (auto& v : s.fg) v = float(0.55 + 0.45 * u(rng));
  s.stripe = 2.0 + 4.0 * u(rng);
  return s;
}

std::vector<DatasetEntry> SyntheticDataset::entries(const std::string& split) const {
  if (split != "train" && split != "val") throw Error(ErrorKind::kIo, "synthetic dataset has no split '" + split + "'");
  std::vector<DatasetEntry> out;
  char id[32];
  for (int i = split == "train" ? 0 : 1; i < count_; i += 2) {
    std::snprintf(id, sizeof(id), "syn-%04d", i);
    out.push_back({id, i % 3, i % 5 == 4 ? 2 : 1});
  }
  return out;
}

std::vector<DatasetEntry> SyntheticDataset::pool(const std::string& split) const {
  return entries(split == "val" ? "train" : split);
}

std::string SyntheticDataset::pool_description(const std::string& split) const {
  return "synthetic/" + std::string(split == "val" ? "train" : split);
}

ImageRGB SyntheticDataset::image(const std::string& id) const {
  const Scene s = scene(id);
  ImageRGB img(size_, size_);
  for (int y = 0; y < size_; ++y) {
    for (int x = 0; x < size_; ++x) {
      const double t = double(y) / size_;
      const double wave = 0.05 * std::sin(2.0 * M_PI * s.stripe * x / size_);
      const bool fg = s.inside_any(x, y);
      for (int c = 0; c < 3; ++c) {
        const double bg = (1 - t) * s.bg0[c] + t * s.bg1[c] + wave;
        const double v = fg ? s.fg[c] * (0.9 + 0.1 * (1 - t)) : bg;
        img.at(c, y, x) = float(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

TaskAnnotation SyntheticDataset::annotation(const std::string& id, TaskKind task) const {
  const Scene s = scene(id);
  BinaryMask mask(size_, size_);
  for (int y = 0; y < size_; ++y) {
    for (int x = 0; x < size_; ++x) mask(y, x) = s.inside_any(x, y);
  }
  switch (task) {
    case TaskKind::kForegroundSegmentation: return mask;
    case TaskKind::kSingleObjectDetection: return tight_box(mask);
    case TaskKind::kSemanticSegmentation: {
      ClassMap cm{IndexMap::Constant(size_, size_, kIgnoreLabel), 3};
      for (int y = 0; y < size_; ++y) {
        for (int x = 0; x < size_; ++x) {
          if (mask(y, x)) cm.ids(y, x) = s.cls;
        }
      }
      return cm;
    }
    case TaskKind::kKeypointDetection: {
      KeypointSet kps{size_, size_, {}};
      const double cx = s.cx[0], cy = s.cy[0], r = s.r[0];
      kps.points.push_back({std::round(cx), std::round(cy - 0.5 * r), true, KeypointGroup::kFace});
      kps.points.push_back({std::round(cx - r), std::round(cy + r), true, KeypointGroup::kBody});
      kps.points.push_back({std::round(cx + r), std::round(cy + r), true, KeypointGroup::kBody});
      for (auto& p : kps.points) {
        p.x = std::clamp(p.x, 0.0, double(size_ - 1));
        p.y = std::clamp(p.y, 0.0, double(size_ - 1));
      }
      return kps;
    }
    case TaskKind::kEdgeDetection: {
      EdgeMap e;
      e.values = EdgeMap::Values::Zero(size_, size_);
      for (int y = 1; y + 1 < size_; ++y) {
        for (int x = 1; x + 1 < size_; ++x) {
          const bool m = mask(y, x);
          if (m != mask(y - 1, x) || m != mask(y + 1, x) || m != mask(y, x - 1) || m != mask(y, x + 1)) {
            e.values(y, x) = 1.0f;
          }
        }
      }
      return e;
    }
    case TaskKind::kColorization: return ColorImage{image(id)};
  }
  throw ConfigError("task", "unknown task");
}

// ---------------------------------------------------------------------------

int dataset_classes(const std::string& name) {
  if (name == "pascal5i") return 20;
  if (name == "cityscapes") return 19;
  if (name == "synthetic") return 3;
  return 0;
}

std::unique_ptr<DatasetAdapter> make_dataset(const std::string& name, const std::string& root) {
  if (name == "synthetic") return std::make_unique<SyntheticDataset>();
  for (const char* known : {"pascal5i", "cityscapes", "deepfashion", "nyudv2", "imagenet"}) {
    if (name == known) {
      if (root.empty()) throw ConfigError("data.root", "dataset " + name + " needs a root directory");
      return std::make_unique<FolderDataset>(name, root, dataset_classes(name));
    }
  }
  throw ConfigError("data.dataset", "unknown dataset '" + name + "'");
}

Sample load_sample(const DatasetAdapter& ds, const std::string& id, TaskKind task, int size) {
  const ImageRGB raw = ds.image(id);
  Sample s;
  s.image = square_crop(raw, size, Resample::kArea);
  s.annotation = crop_annotation(ds.annotation(id, task), raw.height, raw.width, size, s.image);
  return s;
}

std::vector<EpisodeSpec> build_episodes(const DatasetAdapter& ds, const EpisodeBuildOptions& opts,
                                        const VICLConfig& config, VisionEncoderBackend* encoder,
                                        EmbeddingCache* cache) {
  if (opts.n_prompts < 1) throw ConfigError("n_prompts", "must be at least 1");
  const bool single_only = opts.task == TaskKind::kSingleObjectDetection;
  auto keep = [&](const DatasetEntry& e) { return !single_only || e.instances == 1; };

  std::vector<DatasetEntry> queries;
  for (const auto& e : ds.entries(opts.split)) {
    if (keep(e)) queries.push_back(e);
  }
  if (opts.subsample > 0 && opts.subsample < int(queries.size())) {
    std::vector<DatasetEntry> picked;
    for (int i : seeded_sample(int(queries.size()), opts.subsample, opts.seed)) picked.push_back(queries[i]);
    queries = std::move(picked);
  }
  std::vector<DatasetEntry> pool;
  for (const auto& e : ds.pool(opts.split)) {
    if (keep(e)) pool.push_back(e);
  }

  auto embedding = [&](const std::string& id) {
    const std::string key = ds.name() + "/" + id;
    if (cache) {
      if (auto hit = cache->find(key)) return *hit;
    }
    EmbeddingRecord rec = embed(square_crop(ds.image(id), opts.image_size, Resample::kArea), *encoder, key);
    if (cache) cache->insert(rec);
    return rec;
  };

  std::vector<EpisodeSpec> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    EpisodeSpec spec{ds.name(), opts.split, q.id, {}, opts.task, config};
    spec.config.n_prompts = opts.n_prompts;
    if (opts.self_prompt) {
      spec.prompt_ids.assign(std::size_t(opts.n_prompts), q.id);
      out.push_back(std::move(spec));
      continue;
    }
    std::vector<const DatasetEntry*> cands;
    const bool by_class = opts.same_class && uses_class_pools(opts.task) && q.class_id >= 0;
    for (const auto& e : pool) {
      if (e.id == q.id) continue;
      if (by_class && e.class_id != q.class_id) continue;
      cands.push_back(&e);
    }
    if (cands.empty()) {
      throw Error(ErrorKind::kConfig, "no prompt candidates for query " + q.id + " in " + ds.pool_description(opts.split));
    }
    if (opts.selection == PromptSelection::kRandom) {
      for (int i : seeded_sample(int(cands.size()), opts.n_prompts, mix(opts.seed, q.id))) {
        spec.prompt_ids.push_back(cands[i]->id);
      }
    } else {
      if (!encoder) throw ConfigError("retrieval", "nearest-neighbour prompts need a vision encoder");
      std::vector<EmbeddingRecord> recs;
      recs.reserve(cands.size());
      for (const auto* c : cands) recs.push_back(embedding(c->id));
      const std::string prefix = ds.name() + "/";
      for (const auto& hit : retrieve(embedding(q.id), recs, opts.n_prompts)) {
        spec.prompt_ids.push_back(hit.image_id.substr(prefix.size()));
      }
    }
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace sdvicl
