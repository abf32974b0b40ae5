// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "sdvicl/core/types.hpp"

namespace sdvicl {

struct EmbeddingRecord {
  std::string image_id;
  Eigen::VectorXf vector;  // unit norm
  std::string encoder_id;
};

/// Pluggable image encoder. Raw features need not be normalized.
class VisionEncoderBackend {
 public:
  virtual ~VisionEncoderBackend() = default;
  virtual std::string id() const = 0;
  virtual Eigen::VectorXf features(const ImageRGB& img) = 0;
};

/// Deterministic handcrafted encoder: an 8x8 colour thumbnail plus
/// per-channel 8-bin histograms, both mean-centered.
class ThumbnailEncoder final : public VisionEncoderBackend {
 public:
  std::string id() const override { return "thumbnail-8x8-hist8-v1"; }
  Eigen::VectorXf features(const ImageRGB& img) override;
};

std::vector<std::string> available_encoders();
/// Throws ErrorKind::kBackend for unknown names.
std::unique_ptr<VisionEncoderBackend> make_encoder(const std::string& name);

/// Throws ErrorKind::kBackend when the encoder returns an empty or zero vector.
EmbeddingRecord embed(const ImageRGB& img, VisionEncoderBackend& encoder, std::string image_id = {});

struct RetrievalHit {
  std::string image_id;
  double cosine = 0;
};

/// Top-n pool entries by descending cosine similarity, ties broken by id.
/// The query's own id is skipped unless `allow_self`.
std::vector<RetrievalHit> retrieve(const EmbeddingRecord& query, std::span<const EmbeddingRecord> pool, int n,
                                   bool allow_self = false);

/// Embeddings keyed by image id for one encoder. Concurrent readers, exclusive writers.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::string encoder_id) : encoder_id_(std::move(encoder_id)) {}
  EmbeddingCache(EmbeddingCache&& other) noexcept
      : encoder_id_(std::move(other.encoder_id_)), records_(std::move(other.records_)) {}

  const std::string& encoder_id() const { return encoder_id_; }
  std::optional<EmbeddingRecord> find(const std::string& image_id) const;
  /// Throws kIncompatibleEmbeddings when the record's encoder differs.
  void insert(EmbeddingRecord rec);
  std::vector<EmbeddingRecord> records() const;
  std::size_t size() const;

  /// Atomic write of the whole cache (archive with checksum).
  void save(const std::string& path) const;
  static EmbeddingCache load(const std::string& path);

 private:
  std::string encoder_id_;
  mutable std::shared_mutex mu_;
  std::map<std::string, EmbeddingRecord> records_;
};

}  // namespace sdvicl
