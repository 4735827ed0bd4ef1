#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace igae {

// Named-tensor container. Layout: the 5-byte magic "IGAE1", then one entry
// per tensor in name order until end of file:
//   u32 name length, name bytes, u32 rank, rank x u32 dims,
//   prod(dims) x f32 payload (one value for rank 0).
// All integers and floats are little-endian.
inline constexpr char kTensorMagic[] = "IGAE1";

struct StoredTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
  bool operator==(const StoredTensor&) const = default;
};

// std::map keeps entries sorted by name, which is the on-disk order.
using TensorFile = std::map<std::string, StoredTensor>;

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace igae
