// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "sdvicl/retrieval/retrieval.hpp"
#include "test_support.hpp"

namespace sdvicl {
namespace {

// Cosine of the thumbnail embeddings of scene_image(64, 1) and scene_image(64, 2).
constexpr double kSceneCosinePin = -0.065034;

EmbeddingRecord rec(std::string id, std::initializer_list<float> v, std::string enc = "e") {
  Eigen::VectorXf x(v.size());
  int i = 0;
  for (float f : v) x(i++) = f;
  return {std::move(id), x, std::move(enc)};
}

TEST(Retrieve, HandBuiltOrder) {
  const std::vector<EmbeddingRecord> pool{rec("first", {1, 0}), rec("second", {0, 1}), rec("third", {0.9f, 0.436f})};
  const auto hits = retrieve(rec("q", {1, 0}), pool, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].image_id, "first");
  EXPECT_EQ(hits[1].image_id, "third");
  EXPECT_EQ(hits[2].image_id, "second");
  EXPECT_NEAR(hits[0].cosine, 1.0, 1e-6);
  EXPECT_NEAR(hits[1].cosine, 0.9 / std::hypot(0.9, 0.436), 1e-6);
  EXPECT_NEAR(hits[2].cosine, 0.0, 1e-6);
}

TEST(Retrieve, SelfRetrievalAndExclusion) {
  const std::vector<EmbeddingRecord> pool{rec("a", {1, 0}), rec("b", {0.6f, 0.8f}), rec("c", {0, 1})};
  const auto with_self = retrieve(rec("a", {1, 0}), pool, 1, true);
  EXPECT_EQ(with_self[0].image_id, "a");
  EXPECT_NEAR(with_self[0].cosine, 1.0, 1e-6);
  const auto without = retrieve(rec("a", {1, 0}), pool, 5);
  ASSERT_EQ(without.size(), 2u);
  EXPECT_EQ(without[0].image_id, "b");
}

TEST(Retrieve, SaturatesAndBreaksTiesById) {
  const std::vector<EmbeddingRecord> pool{rec("z", {1, 1}), rec("m", {1, 1}), rec("a", {1, 1})};
  const auto hits = retrieve(rec("q", {1, 0}), pool, 10);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].image_id, "a");
  EXPECT_EQ(hits[1].image_id, "m");
  EXPECT_EQ(hits[2].image_id, "z");
}

TEST(Retrieve, ScaleInvariantAndPure) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd;
  std::vector<EmbeddingRecord> pool, scaled;
  std::uniform_real_distribution<float> s(0.1f, 50.0f);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXf v(8);
    for (int j = 0; j < 8; ++j) v(j) = nd(rng);
    pool.push_back({"id" + std::to_string(i), v, "e"});
    scaled.push_back({"id" + std::to_string(i), v * s(rng), "e"});
  }
  const auto q = pool[3];
  const auto a = retrieve(q, pool, 7), b = retrieve(q, scaled, 7), c = retrieve(q, pool, 7);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(a[i].image_id, b[i].image_id);
    EXPECT_EQ(a[i].image_id, c[i].image_id);
  }
}

TEST(Retrieve, Errors) {
  const std::vector<EmbeddingRecord> mixed{rec("a", {1, 0}, "e"), rec("b", {0, 1}, "other")};
  try {
    retrieve(rec("q", {1, 0}, "e"), mixed, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIncompatibleEmbeddings);
  }
  EXPECT_THROW(retrieve(rec("q", {1, 0}), std::vector<EmbeddingRecord>{}, 1), ConfigError);
  const std::vector<EmbeddingRecord> pool{rec("a", {1, 0})};
  EXPECT_THROW(retrieve(rec("q", {1, 0}), pool, 0), ConfigError);
}

TEST(Embed, NormalizedDeterministicAndDiscriminative) {
  ThumbnailEncoder enc;
  const ImageRGB a = testing::scene_image(64, 1), b = testing::scene_image(64, 2);
  const auto ea = embed(a, enc, "a"), ea2 = embed(a, enc, "a"), eb = embed(b, enc, "b");
  EXPECT_NEAR(ea.vector.norm(), 1.0f, 1e-5f);
  EXPECT_EQ(ea.vector, ea2.vector);
  EXPECT_EQ(ea.encoder_id, enc.id());
  const double cosine = ea.vector.dot(eb.vector);
  EXPECT_LT(cosine, 1.0);
  EXPECT_NEAR(cosine, kSceneCosinePin, 1e-4);
}

TEST(Embed, DegenerateVectorIsBackendError) {
  class Zero final : public VisionEncoderBackend {
   public:
    std::string id() const override { return "zero"; }
    Eigen::VectorXf features(const ImageRGB&) override { return Eigen::VectorXf::Zero(4); }
  } zero;
  try {
    embed(ImageRGB(8, 8), zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBackend);
  }
  EXPECT_THROW(make_encoder("clip-vit-l14"), Error);
  EXPECT_EQ(make_encoder("thumbnail")->id(), "thumbnail-8x8-hist8-v1");
}

TEST(EmbeddingCacheTest, InsertFindSaveLoad) {
  testing::TempDir dir("emb");
  EmbeddingCache cache("e");
  cache.insert(rec("x/1", {1, 0, 0}));
  cache.insert(rec("x/2", {0, 0.6f, 0.8f}));
  EXPECT_THROW(cache.insert(rec("x/3", {1, 0, 0}, "other")), Error);
  ASSERT_TRUE(cache.find("x/2"));
  EXPECT_FALSE(cache.find("x/9"));
  cache.save(dir.str("c.svta"));
  const EmbeddingCache back = EmbeddingCache::load(dir.str("c.svta"));
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.encoder_id(), "e");
  EXPECT_EQ(back.find("x/2")->vector, cache.find("x/2")->vector);
}

}  // namespace
}  // namespace sdvicl
