// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sdvicl/retrieval/retrieval.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

#include "sdvicl/core/archive.hpp"
#include "sdvicl/io/image_io.hpp"

namespace sdvicl {

Eigen::VectorXf ThumbnailEncoder::features(const ImageRGB& img) {
  if (img.height == 0 || img.width == 0) throw Error(ErrorKind::kBackend, "cannot embed an empty image");
  constexpr int kGrid = 8, kBins = 8;
  const ImageRGB thumb = resize(img, kGrid, kGrid, Resample::kArea);
  Eigen::VectorXf f(3 * kGrid * kGrid + 3 * kBins);
  for (int c = 0; c < 3; ++c) f.segment(c * kGrid * kGrid, kGrid * kGrid) = thumb.pixels.row(c).transpose();
  f.head(3 * kGrid * kGrid).array() -= f.head(3 * kGrid * kGrid).mean();

  Eigen::VectorXf hist = Eigen::VectorXf::Zero(3 * kBins);
  for (int c = 0; c < 3; ++c) {
    for (Eigen::Index i = 0; i < img.pixels.cols(); ++i) {
      const int b = std::clamp(int(img.pixels(c, i) * kBins), 0, kBins - 1);
      hist(c * kBins + b) += 1.0f;
    }
  }
  hist /= float(img.pixels.cols());
  hist.array() -= 1.0f / kBins;
  f.tail(3 * kBins) = hist;
  return f;
}

std::vector<std::string> available_encoders() { return {"thumbnail"}; }

std::unique_ptr<VisionEncoderBackend> make_encoder(const std::string& name) {
  if (name == "thumbnail") return std::make_unique<ThumbnailEncoder>();
  throw Error(ErrorKind::kBackend, "vision encoder '" + name + "' is not available in this build");
}

EmbeddingRecord embed(const ImageRGB& img, VisionEncoderBackend& encoder, std::string image_id) {
  Eigen::VectorXf v = encoder.features(img);
  const float norm = v.norm();
  if (v.size() == 0 || !(norm > 0.0f) || !std::isfinite(norm)) {
    throw Error(ErrorKind::kBackend, "encoder " + encoder.id() + " returned a degenerate embedding");
  }
  return {std::move(image_id), v / norm, encoder.id()};
}

std::vector<RetrievalHit> retrieve(const EmbeddingRecord& query, std::span<const EmbeddingRecord> pool, int n,
                                   bool allow_self) {
  if (pool.empty()) throw ConfigError("pool", "retrieval pool is empty");
  if (n < 1) throw ConfigError("n", "must be positive");
  const Eigen::VectorXf q = query.vector.normalized();
  std::vector<RetrievalHit> hits;
  hits.reserve(pool.size());
  for (const auto& rec : pool) {
    if (rec.encoder_id != query.encoder_id) {
      throw Error(ErrorKind::kIncompatibleEmbeddings,
                  "pool entry " + rec.image_id + " uses encoder " + rec.encoder_id + ", query uses " + query.encoder_id);
    }
    if (rec.vector.size() != q.size()) throw_dimension("embedding size mismatch for " + rec.image_id);
    if (!allow_self && rec.image_id == query.image_id) continue;
    hits.push_back({rec.image_id, double(q.dot(rec.vector.normalized()))});
  }
  std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    return a.cosine != b.cosine ? a.cosine > b.cosine : a.image_id < b.image_id;
  });
  if (int(hits.size()) > n) hits.resize(n);
  return hits;
}

std::optional<EmbeddingRecord> EmbeddingCache::find(const std::string& image_id) const {
  std::shared_lock lock(mu_);
  auto it = records_.find(image_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(EmbeddingRecord rec) {
  if (rec.encoder_id != encoder_id_) {
    throw Error(ErrorKind::kIncompatibleEmbeddings, "cache holds " + encoder_id_ + " embeddings, got " + rec.encoder_id);
  }
  std::unique_lock lock(mu_);
  records_[rec.image_id] = std::move(rec);
}

std::vector<EmbeddingRecord> EmbeddingCache::records() const {
  std::shared_lock lock(mu_);
  std::vector<EmbeddingRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, rec] : records_) out.push_back(rec);
  return out;
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

void EmbeddingCache::save(const std::string& path) const {
  TensorArchive a;
  a.metadata["kind"] = "embedding-cache";
  a.metadata["encoder_id"] = encoder_id_;
  std::shared_lock lock(mu_);
  std::string ids;
  for (const auto& [id, rec] : records_) {
    ids += id + '\n';
    a.put("vec/" + id, {rec.vector.size()}, std::vector<float>(rec.vector.data(), rec.vector.data() + rec.vector.size()));
  }
  a.metadata["ids"] = ids;
  lock.unlock();
  a.save(path);
}

EmbeddingCache EmbeddingCache::load(const std::string& path) {
  const TensorArchive a = TensorArchive::load(path);
  if (a.meta("kind") != "embedding-cache") throw Error(ErrorKind::kIo, path + " is not an embedding cache");
  EmbeddingCache cache(a.meta("encoder_id"));
  std::istringstream ids(a.meta("ids"));
  std::string id;
  while (std::getline(ids, id)) {
    if (id.empty()) continue;
    const auto& t = a.at("vec/" + id);
    cache.records_[id] = {id, Eigen::Map<const Eigen::VectorXf>(t.data.data(), Eigen::Index(t.data.size())),
                          cache.encoder_id_};
  }
  return cache;
}

}  // namespace sdvicl
