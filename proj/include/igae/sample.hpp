#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "igae/dataman.hpp"
#include "igae/image.hpp"

namespace igae {

struct Sample {
  Image pixels;
  Labels labels;
  std::string name;  // image path, used in diagnostics and reports
};

// Reads each record's raw image relative to image_root and encodes its labels.
std::vector<Sample> load_samples(const Records& records, const std::filesystem::path& image_root,
                                 const LabelMaps& maps);

}  // namespace igae
