#pragma once

#include <array>

#include "igae/image.hpp"
#include "igae/rng.hpp"
#include "igae/sample.hpp"

namespace igae {

struct AugmentConfig {
  int resize = 256;  // R: side after the initial resize (train path)
  int crop = 224;    // S: network input side
  double jitter = 0.2;
  std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> std{0.5f, 0.5f, 0.5f};

  // 40 -> 32 profile used for desk-scale runs.
  static AugmentConfig desk() {
    AugmentConfig c;
    c.resize = 40;
    c.crop = 32;
    return c;
  }

  // Throws ConfigError when crop > resize or a parameter is out of range.
  void validate() const;
};

// Bilinear with half-pixel centres; resizing to the same size is exact.
Image resize_bilinear(const Image& in, int height, int width);
Image crop(const Image& in, int top, int left, int height, int width);
Image flip_horizontal(const Image& in);
// Brightness, then contrast (about the mean luma), then saturation (about
// per-pixel luma); each stage is clamped to [0, 1].
Image color_jitter(const Image& in, double brightness, double contrast, double saturation);
Image normalize(const Image& in, const std::array<float, 3>& mean, const std::array<float, 3>& std);

// resize R -> random S crop -> flip (p = 0.5) -> jitter -> normalize.
Image augment_train(const Image& in, const AugmentConfig& cfg, Rng& rng);
// resize S -> normalize.
Image augment_eval(const Image& in, const AugmentConfig& cfg);

inline Sample augment_train(const Sample& s, const AugmentConfig& cfg, Rng& rng) {
  return {augment_train(s.pixels, cfg, rng), s.labels, s.name};
}
inline Sample augment_eval(const Sample& s, const AugmentConfig& cfg) {
  return {augment_eval(s.pixels, cfg), s.labels, s.name};
}

}  // namespace igae
