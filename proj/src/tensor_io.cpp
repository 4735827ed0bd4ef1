#include "igae/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "igae/errors.hpp"

namespace igae {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
  return true;
}

}  // namespace

std::size_t StoredTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kTensorMagic, 5);
  for (const auto& [name, t] : file) {
    if (t.values.size() != t.element_count())
      throw DimensionError("tensor '" + name + "' payload does not match its dims");
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(os, d);
    for (float f : t.values) put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
  if (!os) throw IoError("write failed for " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kTensorMagic, 5) != 0)
    throw IoError(path.string() + ": not a tensor file (bad magic)");

  TensorFile out;
  std::uint32_t name_len;
  while (get_u32(is, name_len)) {
    if (name_len > 4096) throw IoError(path.string() + ": implausible name length");
    std::string name(name_len, '\0');
    std::uint32_t rank;
    if (!is.read(name.data(), name_len) || !get_u32(is, rank) || rank > 8)
      throw IoError(path.string() + ": truncated entry header");
    StoredTensor t;
    t.dims.resize(rank);
    for (auto& d : t.dims)
      if (!get_u32(is, d)) throw IoError(path.string() + ": truncated dims for '" + name + "'");
    const auto count = t.element_count();
    if (count > (std::size_t{1} << 30)) throw IoError(path.string() + ": tensor '" + name + "' too large");
    t.values.resize(count);
    for (auto& f : t.values) {
      std::uint32_t bits;
      if (!get_u32(is, bits)) throw IoError(path.string() + ": truncated payload for '" + name + "'");
      f = std::bit_cast<float>(bits);
    }
    if (!out.emplace(std::move(name), std::move(t)).second) throw IoError(path.string() + ": duplicate tensor name");
  }
  return out;
}

}  // namespace igae
