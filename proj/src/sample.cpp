#include "igae/sample.hpp"

namespace igae {

std::vector<Sample> load_samples(const Records& records, const std::filesystem::path& image_root,
                                 const LabelMaps& maps) {
  std::vector<Sample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::filesystem::path p = r.image_path;
    out.push_back({read_raw_image(p.is_absolute() ? p : image_root / p), maps.encode(r), r.image_path});
  }
  return out;
}

}  // namespace igae
