#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "igae/dataman.hpp"
#include "igae/image.hpp"
#include "igae/sample.hpp"

namespace igae {

// Desk-scale stand-in for a hand-image corpus: every subject owns a fixed
// gender, age, base hue and stripe texture, with the stripe direction set by
// gender; each image adds a random phase and pixel noise. Image k of subject
// s depends only on (seed, s, k), so a larger images_per_subject extends a
// smaller call without changing it.
struct SynthDataset {
  Records records;
  std::map<std::string, Image> pixels;  // keyed by image_path
};

SynthDataset synth_dataset(int n_subjects, int images_per_subject, int image_size, std::uint64_t seed);

// In-memory samples in record order.
std::vector<Sample> to_samples(const SynthDataset& data, const LabelMaps& maps);

// Writes manifest.csv and the raw pixel store under dir.
void write_synth_dataset(const std::filesystem::path& dir, const SynthDataset& data);

// Per-aspect statistics of the 11k hands corpus after accessory exclusion.
struct AspectStats {
  int identities;
  int images;
  int male;
  int female;
  std::array<int, 6> age_groups;
};

const AspectStats& eleven_k_stats(Aspect aspect);

// A manifest (no pixels) whose four aspect partitions reproduce
// eleven_k_stats exactly once accessory rows are filtered out. Extra rows
// flagged with accessories are mixed in, including subjects that only ever
// appear with accessories. Attributes are drawn per aspect, so a subject id
// that occurs in several aspects need not carry the same gender or age.
Records synth_statistics_manifest(std::uint64_t seed);

}  // namespace igae
