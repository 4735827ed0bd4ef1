#include "igae/augment.hpp"

#include <algorithm>
#include <cmath>

#include "igae/errors.hpp"

namespace igae {
namespace {

constexpr float kLuma[3] = {0.299f, 0.587f, 0.114f};

Eigen::RowVectorXf luma(const Image& img) {
  return kLuma[0] * img.pixels.row(0) + kLuma[1] * img.pixels.row(1) + kLuma[2] * img.pixels.row(2);
}

}  // namespace

void AugmentConfig::validate() const {
  if (crop <= 0 || resize <= 0) throw ConfigError("image sizes must be positive");
  if (crop > resize)
    throw ConfigError("crop size " + std::to_string(crop) + " exceeds resize " + std::to_string(resize));
  if (jitter < 0.0 || jitter >= 1.0) throw ConfigError("jitter must lie in [0, 1)");
  for (float s : std) if (!(s > 0.0f)) throw ConfigError("normalization std must be positive");
}

Image resize_bilinear(const Image& in, int height, int width) {
  if (height <= 0 || width <= 0) throw DimensionError("resize target must be positive");
  if (height == in.height && width == in.width) return in;
  Image out(height, width);
  const double sy = static_cast<double>(in.height) / height;
  const double sx = static_cast<double>(in.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in.height - 1);
    const float wy = static_cast<float>(fy - y0);
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in.width - 1);
      const float wx = static_cast<float>(fx - x0);
      for (int c = 0; c < 3; ++c) {
        const float top = (1 - wx) * in.at(c, y0, x0) + wx * in.at(c, y0, x1);
        const float bot = (1 - wx) * in.at(c, y1, x0) + wx * in.at(c, y1, x1);
        out.at(c, y, x) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image crop(const Image& in, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || top + height > in.height || left + width > in.width)
    throw DimensionError("crop window outside image");
  Image out(height, width);
  for (int y = 0; y < height; ++y)
    out.pixels.middleCols(Eigen::Index{y} * width, width) =
        in.pixels.middleCols(Eigen::Index{top + y} * in.width + left, width);
  return out;
}

Image flip_horizontal(const Image& in) {
  Image out(in.height, in.width);
  for (int y = 0; y < in.height; ++y)
    out.pixels.middleCols(Eigen::Index{y} * in.width, in.width) =
        in.pixels.middleCols(Eigen::Index{y} * in.width, in.width).rowwise().reverse();
  return out;
}

Image color_jitter(const Image& in, double brightness, double contrast, double saturation) {
  Image out = in;
  out.pixels = (out.pixels * static_cast<float>(brightness)).cwiseMax(0.0f).cwiseMin(1.0f);

  const float mean_luma = luma(out).mean();
  out.pixels = ((out.pixels.array() - mean_luma) * static_cast<float>(contrast) + mean_luma)
                   .cwiseMax(0.0f)
                   .cwiseMin(1.0f)
                   .matrix();

  const Eigen::RowVectorXf gray = luma(out);
  for (int c = 0; c < 3; ++c)
    out.pixels.row(c) = ((out.pixels.row(c) - gray) * static_cast<float>(saturation) + gray)
                            .cwiseMax(0.0f)
                            .cwiseMin(1.0f);
  return out;
}

Image normalize(const Image& in, const std::array<float, 3>& mean, const std::array<float, 3>& std) {
  Image out = in;
  for (int c = 0; c < 3; ++c) out.pixels.row(c) = (in.pixels.row(c).array() - mean[c]) / std[c];
  return out;
}

Image augment_train(const Image& in, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Image img = resize_bilinear(in, cfg.resize, cfg.resize);
  const int span = cfg.resize - cfg.crop + 1;
  const int top = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(span)));
  const int left = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(span)));
  img = crop(img, top, left, cfg.crop, cfg.crop);
  if (uniform01(rng) < 0.5) img = flip_horizontal(img);
  const double b = uniform(rng, 1.0 - cfg.jitter, 1.0 + cfg.jitter);
  const double c = uniform(rng, 1.0 - cfg.jitter, 1.0 + cfg.jitter);
  const double s = uniform(rng, 1.0 - cfg.jitter, 1.0 + cfg.jitter);
  img = color_jitter(img, b, c, s);
  return normalize(img, cfg.mean, cfg.std);
}

Image augment_eval(const Image& in, const AugmentConfig& cfg) {
  cfg.validate();
  return normalize(resize_bilinear(in, cfg.crop, cfg.crop), cfg.mean, cfg.std);
}

}  // namespace igae
