#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "featdistill/errors.hpp"
#include "featdistill/image.hpp"
#include "featdistill/image_io.hpp"
#include "featdistill/rng.hpp"
#include "featdistill/scene.hpp"
#include "test_support.hpp"

using namespace featdistill;

namespace {

ImageBuffer random_image(std::uint64_t seed, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
  SeededRng rng(seed);
  ImageBuffer img(w, h, c);
  for (float& s : img.samples()) s = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

}  // namespace

TEST(ConstantImage, FillsEverySample) {
  struct Case { int w, h, c; float v; std::size_t n; };
  for (const Case& k : {Case{2, 2, 1, 0.0f, 4}, Case{1, 1, 3, 1.0f, 3}, Case{3, 2, 3, 0.5f, 18}}) {
    const ImageBuffer img = new_constant_image(k.w, k.h, k.c, k.v);
    ASSERT_EQ(img.size(), k.n);
    for (float s : img.samples()) EXPECT_EQ(s, k.v);
  }
}

TEST(ConstantImage, RejectsZeroDimensionsAndBadValues) {
  EXPECT_THROW(new_constant_image(0, 2, 1, 0.5f), InvalidArgument);
  EXPECT_THROW(new_constant_image(2, 0, 3, 0.5f), InvalidArgument);
  EXPECT_THROW(new_constant_image(2, 2, 2, 0.5f), InvalidArgument);
  EXPECT_THROW(new_constant_image(2, 2, 1, 1.5f), InvalidArgument);
  EXPECT_THROW(ImageBuffer(2, 2, 1, std::vector<float>(3)), InvalidArgument);
}

TEST(Psnr, IdenticalImagesGiveInfinity) {
  const ImageBuffer a = random_image(1, 8, 5, 3);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, BlackVersusWhiteIsZeroDb) {
  EXPECT_DOUBLE_EQ(psnr(new_constant_image(4, 4, 1, 0.0f), new_constant_image(4, 4, 1, 1.0f)), 0.0);
}

TEST(Psnr, HalfVersusPointSixIsTwentyDb) {
  for (auto [w, h, c] : {std::tuple{1, 1, 1}, std::tuple{7, 3, 3}, std::tuple{64, 64, 1}}) {
    EXPECT_NEAR(psnr(new_constant_image(w, h, c, 0.5f), new_constant_image(w, h, c, 0.6f)), 20.0, 1e-5);
  }
}

TEST(Psnr, ShapeMismatchThrows) {
  EXPECT_THROW(psnr(new_constant_image(2, 2, 1, 0.f), new_constant_image(2, 3, 1, 0.f)), InvalidArgument);
  EXPECT_THROW(psnr(new_constant_image(2, 2, 1, 0.f), new_constant_image(2, 2, 3, 0.f)), InvalidArgument);
}

TEST(Psnr, IsSymmetric) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ImageBuffer a = random_image(s, 9, 4, 3);
    const ImageBuffer b = random_image(s + 100, 9, 4, 3);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
  }
}

TEST(Clamp, ClampsBothEndsAndKeepsInRange) {
  ImageBuffer img(3, 1, 1, {-0.2f, 1.7f, 0.4f});
  const ImageBuffer out = clamp(img);
  EXPECT_EQ(out.at(0, 0, 0), 0.0f);
  EXPECT_EQ(out.at(1, 0, 0), 1.0f);
  EXPECT_EQ(out.at(2, 0, 0), 0.4f);
}

TEST(Clamp, IsIdempotent) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ImageBuffer once = clamp(random_image(s, 6, 6, 3, -2.0, 3.0));
    EXPECT_TRUE(bitwise_equal(clamp(once), once));
  }
}

TEST(Resize, SameSizeIsIdentityAndConstantsSurvive) {
  const ImageBuffer a = random_image(3, 10, 7, 3);
  EXPECT_TRUE(bitwise_equal(resize_bilinear(a, 10, 7), a));
  const ImageBuffer c = resize_bilinear(new_constant_image(13, 9, 3, 0.3f), 5, 21);
  EXPECT_EQ(c.width(), 5);
  EXPECT_EQ(c.height(), 21);
  for (float s : c.samples()) EXPECT_NEAR(s, 0.3f, 1e-6);
}

TEST(ToRgb, ReplicatesGray) {
  const ImageBuffer g(2, 1, 1, {0.25f, 0.75f});
  const ImageBuffer rgb = to_rgb(g);
  ASSERT_EQ(rgb.channels(), 3);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(rgb.at(0, 0, c), 0.25f);
    EXPECT_EQ(rgb.at(1, 0, c), 0.75f);
  }
}

TEST(PngIo, EightBitRoundTripIsBitExact) {
  testsupport::TempDir dir("png");
  SeededRng rng(5);
  for (int channels : {1, 3}) {
    ImageBuffer img(17, 11, channels);
    for (float& s : img.samples()) s = static_cast<float>(rng.below(256)) / 255.0f;
    const auto path = dir / ("img" + std::to_string(channels) + ".png");
    save_png(img, path);
    const ImageBuffer back = load_png(path);
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(to_byte(back.samples()[i]), to_byte(img.samples()[i]));
    save_png(back, dir / "again.png");
    EXPECT_EQ(testsupport::read_file(path), testsupport::read_file(dir / "again.png"));
  }
}

TEST(PngIo, MissingFileThrows) {
  EXPECT_ANY_THROW(load_png("/nonexistent/definitely_missing.png"));
}

TEST(JpegIo, HighQualityRoundTripIsClose) {
  const ImageBuffer img = make_scene(9, 96, 64);
  const ImageBuffer back = decode_jpeg(encode_jpeg(img, 100));
  ASSERT_TRUE(back.same_shape(img));
  EXPECT_GE(psnr(back, img), 40.0);
  EXPECT_EQ(encode_jpeg(img, 50), encode_jpeg(img, 50));
}

TEST(Scene, DeterministicAndInRange) {
  const ImageBuffer a = make_scene(77, 40, 30);
  EXPECT_TRUE(bitwise_equal(a, make_scene(77, 40, 30)));
  EXPECT_FALSE(bitwise_equal(a, make_scene(78, 40, 30)));
  for (float s : a.samples()) {
    EXPECT_GE(s, 0.0f);
    EXPECT_LE(s, 1.0f);
  }
}
