#include "igae/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "igae/errors.hpp"

namespace igae {
namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated raw image header");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

}  // namespace

std::vector<std::uint8_t> to_bytes(const Image& image) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(image.height) * image.width * 3);
  std::size_t k = 0;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        out[k++] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  return out;
}

Image from_bytes(int height, int width, const std::vector<std::uint8_t>& interleaved) {
  if (interleaved.size() != static_cast<std::size_t>(height) * width * 3)
    throw DimensionError("pixel buffer size does not match " + std::to_string(width) + "x" +
                         std::to_string(height) + "x3");
  Image img(height, width);
  std::size_t k = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(interleaved[k++]) / 255.0f;
  return img;
}

void write_raw_image(const std::filesystem::path& path, const Image& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  put_u32(os, static_cast<std::uint32_t>(image.width));
  put_u32(os, static_cast<std::uint32_t>(image.height));
  put_u32(os, 3);
  const auto bytes = to_bytes(image);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

Image read_raw_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const auto width = get_u32(is);
  const auto height = get_u32(is);
  const auto channels = get_u32(is);
  if (channels != 3) throw IoError(path.string() + ": expected 3 channels, got " + std::to_string(channels));
  if (width == 0 || height == 0 || width > 65536 || height > 65536)
    throw IoError(path.string() + ": implausible image size");
  std::vector<std::uint8_t> bytes(std::size_t{width} * height * 3);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw IoError(path.string() + ": truncated pixel data");
  return from_bytes(static_cast<int>(height), static_cast<int>(width), bytes);
}

}  // namespace igae
