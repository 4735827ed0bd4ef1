#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace igae {

// Planar RGB image. Row c of `pixels` holds channel c with spatial index
// y * width + x. Values are nominally in [0, 1] before normalization.
struct Image {
  using Planes = Eigen::Matrix<float, 3, Eigen::Dynamic, Eigen::RowMajor>;

  int height = 0;
  int width = 0;
  Planes pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(Planes::Zero(3, Eigen::Index{h} * w)) {}

  float& at(int c, int y, int x) { return pixels(c, Eigen::Index{y} * width + x); }
  float at(int c, int y, int x) const { return pixels(c, Eigen::Index{y} * width + x); }

  bool operator==(const Image& o) const {
    return height == o.height && width == o.width && pixels == o.pixels;
  }
};

// Raw pixel-store file: width, height, channels (u32 little-endian) then
// row-major interleaved 8-bit bytes.
void write_raw_image(const std::filesystem::path& path, const Image& image);
Image read_raw_image(const std::filesystem::path& path);

// Quantize to 8-bit and back; the identity on images read from a raw file.
std::vector<std::uint8_t> to_bytes(const Image& image);
Image from_bytes(int height, int width, const std::vector<std::uint8_t>& interleaved);

}  // namespace igae
