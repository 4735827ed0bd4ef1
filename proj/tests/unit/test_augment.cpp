#include "doctest.h"

#include "igae/augment.hpp"
#include "igae/errors.hpp"

using namespace igae;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] = static_cast<float>(uniform01(rng));
  return img;
}

}  // namespace

TEST_CASE("eval path maps a constant 0.5 image to zeros") {
  Image img(50, 37);
  img.pixels.setConstant(0.5f);
  const auto out = augment_eval(img, AugmentConfig::desk());
  CHECK(out.height == 32);
  CHECK(out.width == 32);
  CHECK(out.pixels.isZero(0.0));
}

TEST_CASE("train path output is 3 x S x S for any input size") {
  Rng rng(4);
  for (auto [h, w] : {std::pair{32, 32}, std::pair{17, 90}, std::pair{64, 48}, std::pair{5, 5}}) {
    const auto out = augment_train(random_image(h, w, 1), AugmentConfig::desk(), rng);
    CHECK(out.height == 32);
    CHECK(out.width == 32);
    CHECK(out.pixels.rows() == 3);
    CHECK(out.pixels.cols() == 32 * 32);
  }
  AugmentConfig full;
  const auto out = augment_train(random_image(40, 30, 2), full, rng);
  CHECK(out.height == 224);
}

TEST_CASE("horizontal flip is an involution and mirrors columns") {
  const auto img = random_image(9, 13, 3);
  const auto f = flip_horizontal(img);
  CHECK(f.at(1, 4, 0) == img.at(1, 4, 12));
  CHECK(flip_horizontal(f) == img);
}

TEST_CASE("crop larger than resize is a config error") {
  AugmentConfig cfg;
  cfg.resize = 30;
  cfg.crop = 32;
  Rng rng(1);
  CHECK_THROWS_AS(augment_train(random_image(40, 40, 1), cfg, rng), ConfigError);
  CHECK_THROWS_AS(augment_eval(random_image(40, 40, 1), cfg), ConfigError);
}

TEST_CASE("resize to the same size is exact and bilinear preserves constants") {
  const auto img = random_image(16, 16, 5);
  CHECK(resize_bilinear(img, 16, 16) == img);
  Image c(7, 11);
  c.pixels.setConstant(0.25f);
  const auto r = resize_bilinear(c, 23, 5);
  CHECK((r.pixels.array() - 0.25f).abs().maxCoeff() < 1e-6f);
}

TEST_CASE("crop extracts the window") {
  const auto img = random_image(10, 10, 6);
  const auto c = crop(img, 2, 3, 4, 5);
  CHECK(c.at(2, 0, 0) == img.at(2, 2, 3));
  CHECK(c.at(0, 3, 4) == img.at(0, 5, 7));
  CHECK_THROWS_AS(crop(img, 7, 0, 4, 4), DimensionError);
}

TEST_CASE("jitter with unit factors is the identity and output stays in range") {
  const auto img = random_image(8, 8, 7);
  CHECK((color_jitter(img, 1.0, 1.0, 1.0).pixels - img.pixels).cwiseAbs().maxCoeff() < 1e-6f);
  const auto j = color_jitter(img, 1.2, 0.8, 1.2);
  CHECK(j.pixels.minCoeff() >= 0.0f);
  CHECK(j.pixels.maxCoeff() <= 1.0f);
}

TEST_CASE("augment_eval is deterministic, augment_train reproducible from the rng stream") {
  const auto img = random_image(40, 40, 8);
  const auto cfg = AugmentConfig::desk();
  CHECK(augment_eval(img, cfg) == augment_eval(img, cfg));
  Rng a(99), b(99), c(100);
  const auto x = augment_train(img, cfg, a);
  CHECK(x == augment_train(img, cfg, b));
  CHECK(!(x == augment_train(img, cfg, c)));
}

TEST_CASE("normalization uses per-channel mean and std") {
  Image img(1, 1);
  img.pixels << 0.0f, 0.5f, 1.0f;
  const auto n = normalize(img, {0.5f, 0.5f, 0.5f}, {0.5f, 0.5f, 0.5f});
  CHECK(n.at(0, 0, 0) == -1.0f);
  CHECK(n.at(1, 0, 0) == 0.0f);
  CHECK(n.at(2, 0, 0) == 1.0f);
}
