// Copyright 2026 The sdvicl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "sdvicl/io/image_io.hpp"
#include "test_support.hpp"

namespace sdvicl {
namespace {

TEST(ImageIo, PngRoundTripIsEightBitExact) {
  testing::TempDir dir("io");
  const ImageRGB img = testing::scene_image(40, 3);
  save_image(img, dir.str("sub/x.png"));
  const ImageRGB back = load_image(dir.str("sub/x.png"));
  ASSERT_EQ(back.height, 40);
  EXPECT_LE((back.pixels - img.pixels).cwiseAbs().maxCoeff(), 0.5f / 255 + 1e-6f);
  EXPECT_GT(psnr(back, img), 50.0);
}

TEST(ImageIo, IndexMapsKeepLargeIds) {
  testing::TempDir dir("io");
  IndexMap ids(3, 4);
  ids << 0, 1, 2, 3, 255, 19, 7, 300, 4, 5, 6, 1000;
  save_index_map(ids, dir.str("m.png"));
  EXPECT_TRUE((load_index_map(dir.str("m.png")) == ids).all());
}

TEST(ImageIo, MissingFileIsIoError) {
  try {
    load_image("/no/such/file.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(ImageIo, SquareCropGeometry) {
  const auto g = square_crop_geometry(100, 200, 50);
  EXPECT_EQ(g.scaled_height, 50);
  EXPECT_EQ(g.scaled_width, 100);
  EXPECT_EQ(g.x0, 25);
  EXPECT_EQ(g.y0, 0);
  const ImageRGB c = square_crop(ImageRGB(100, 200), 50);
  EXPECT_EQ(c.height, 50);
  EXPECT_EQ(c.width, 50);
}

TEST(ImageIo, GrayscaleAndPsnr) {
  const ImageRGB g = to_grayscale(testing::scene_image(16, 4));
  EXPECT_EQ(g.pixels.row(0), g.pixels.row(2));
  EXPECT_TRUE(std::isinf(psnr(g, g)));
  ImageRGB black(4, 4), gray(4, 4);
  gray.pixels.setConstant(0.1f);
  EXPECT_NEAR(psnr(black, gray), 20.0, 1e-4);
}

}  // namespace
}  // namespace sdvicl
