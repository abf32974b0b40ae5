// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sdvicl/core/config.hpp"
#include "sdvicl/retrieval/retrieval.hpp"
#include "sdvicl/tasks/tasks.hpp"

namespace sdvicl {

struct DatasetEntry {
  std::string id;
  int class_id = -1;   // object class for class-structured datasets
  int instances = 1;   // object instances in the image
};

/// Read access to one dataset in the normalized layout:
///   <root>/images/<id>.png|.jpg
///   <root>/annotations/<id>.png      masks (0 = background), class maps, soft edges
///   <root>/annotations/<id>.box.txt  boxes
///   <root>/annotations/<id>.kp.txt   keypoints
///   <root>/splits/<split>.txt        query list, "<id> [class] [instances]" per line
///   <root>/splits/<split>.pool.txt   prompt pool for that split (defaults to the split itself)
class DatasetAdapter {
 public:
  virtual ~DatasetAdapter() = default;
  virtual std::string name() const = 0;
  virtual int num_classes() const { return 0; }
  virtual std::vector<DatasetEntry> entries(const std::string& split) const = 0;
  virtual std::vector<DatasetEntry> pool(const std::string& split) const = 0;
  virtual std::string pool_description(const std::string& split) const = 0;
  virtual ImageRGB image(const std::string& id) const = 0;
  virtual TaskAnnotation annotation(const std::string& id, TaskKind task) const = 0;
};

class FolderDataset final : public DatasetAdapter {
 public:
  /// Throws kIo when `root` is missing.
  FolderDataset(std::string name, std::string root, int num_classes = 0);

  std::string name() const override { return name_; }
  int num_classes() const override { return num_classes_; }
  std::vector<DatasetEntry> entries(const std::string& split) const override;
  std::vector<DatasetEntry> pool(const std::string& split) const override;
  std::string pool_description(const std::string& split) const override;
  ImageRGB image(const std::string& id) const override;
  TaskAnnotation annotation(const std::string& id, TaskKind task) const override;

 private:
  std::string split_path(const std::string& split, bool pool) const;
  std::vector<DatasetEntry> read_split(const std::string& path) const;

  std::string name_;
  std::string root_;
  int num_classes_;
};

/// Procedural shapes on textured backgrounds; classes are shape types.
/// Splits "train" and "val" (pool of "val" is "train").
class SyntheticDataset final : public DatasetAdapter {
 public:
  explicit SyntheticDataset(int count = 48, int size = 128, std::uint64_t seed = 7);

  std::string name() const override { return "synthetic"; }
  int num_classes() const override { return 3; }
  std::vector<DatasetEntry> entries(const std::string& split) const override;
  std::vector<DatasetEntry> pool(const std::string& split) const override;
  std::string pool_description(const std::string& split) const override;
  ImageRGB image(const std::string& id) const override;
  TaskAnnotation annotation(const std::string& id, TaskKind task) const override;

 private:
  struct Scene;
  Scene scene(const std::string& id) const;

  int count_;
  int size_;
  std::uint64_t seed_;
};

/// Known names: pascal5i, cityscapes, deepfashion, nyudv2, imagenet (need a
/// root) and synthetic.
std::unique_ptr<DatasetAdapter> make_dataset(const std::string& name, const std::string& root);
int dataset_classes(const std::string& name);

struct Sample {
  ImageRGB image;
  TaskAnnotation annotation;
};

/// Image and annotation, square-cropped together to `size`.
Sample load_sample(const DatasetAdapter& ds, const std::string& id, TaskKind task, int size);

enum class PromptSelection { kNearest, kRandom };

struct EpisodeBuildOptions {
  std::string split;
  TaskKind task = TaskKind::kForegroundSegmentation;
  int n_prompts = 1;
  PromptSelection selection = PromptSelection::kNearest;
  bool same_class = true;  // applied to segmentation and detection only
  bool self_prompt = false;  // the query is its own prompt
  std::uint64_t seed = 0;
  int subsample = 0;  // 0 = every entry
  int image_size = 512;
};

struct EpisodeSpec {
  std::string dataset;
  std::string split;
  std::string query_id;
  std::vector<std::string> prompt_ids;
  TaskKind task = TaskKind::kForegroundSegmentation;
  VICLConfig config;
};

/// Deterministic for fixed options. Detection keeps single-instance images only.
/// `cache` (optional) must match the encoder and is filled as images are embedded.
std::vector<EpisodeSpec> build_episodes(const DatasetAdapter& ds, const EpisodeBuildOptions& opts,
                                        const VICLConfig& config, VisionEncoderBackend* encoder,
                                        EmbeddingCache* cache = nullptr);

/// Seeded draw of k distinct indices from [0, n), in draw order.
std::vector<int> seeded_sample(int n, int k, std::uint64_t seed);

}  // namespace sdvicl
