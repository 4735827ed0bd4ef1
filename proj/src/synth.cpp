#include "igae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "igae/errors.hpp"
#include "igae/rng.hpp"

namespace igae {
namespace {

constexpr std::array<int, 6> kGroupAges = {19, 21, 22, 23, 27, 40};

std::array<float, 3> hue_to_rgb(double hue, double sat, double val) {
  const double h = std::fmod(hue, 1.0) * 6.0;
  const int i = static_cast<int>(h);
  const double f = h - i;
  const double p = val * (1 - sat), q = val * (1 - sat * f), t = val * (1 - sat * (1 - f));
  double r, g, b;
  switch (i % 6) {
    case 0: r = val, g = t, b = p; break;
    case 1: r = q, g = val, b = p; break;
    case 2: r = p, g = val, b = t; break;
    case 3: r = p, g = q, b = val; break;
    case 4: r = t, g = p, b = val; break;
    default: r = val, g = p, b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

std::string subject_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%04d", i + 1);
  return buf;
}

}  // namespace

SynthDataset synth_dataset(int n_subjects, int images_per_subject, int image_size, std::uint64_t seed) {
  if (n_subjects < 2) throw ConfigError("synthetic dataset needs at least 2 subjects");
  if (images_per_subject < 1 || image_size < 2) throw ConfigError("invalid synthetic dataset size");

  SynthDataset out;
  const double hue_offset = [&] {
    Rng r(mix_seed({seed, 0x5eed}));
    return uniform01(r);
  }();

  for (int s = 0; s < n_subjects; ++s) {
    Rng srng(mix_seed({seed, static_cast<std::uint64_t>(s), 1}));
    const auto gender = (s % 2 == 0) ? Gender::male : Gender::female;
    const int age = kGroupAges[static_cast<std::size_t>(s % 6)];
    const double hue = hue_offset + static_cast<double>(s) / n_subjects;
    const auto base = hue_to_rgb(hue, 0.85, 0.9);
    const auto accent = hue_to_rgb(hue + 0.5, 0.4, 0.35 + 0.3 * uniform01(srng));
    // Stripe direction carries gender: near-vertical bands for male, near-horizontal for female.
    const double theta = (gender == Gender::male ? 0.0 : std::numbers::pi / 2) + 0.3 * (uniform01(srng) - 0.5);
    const double freq = 2.0 + static_cast<double>(uniform_index(srng, 3));
    const double cx = std::cos(theta), sy = std::sin(theta);

    const auto id = subject_name(s);
    for (int k = 0; k < images_per_subject; ++k) {
      Rng irng(mix_seed({seed, static_cast<std::uint64_t>(s), 2, static_cast<std::uint64_t>(k)}));
      const double phase = 2.0 * std::numbers::pi * uniform01(irng);
      Image img(image_size, image_size);
      for (int y = 0; y < image_size; ++y)
        for (int x = 0; x < image_size; ++x) {
          const double u = (x * cx + y * sy) / image_size;
          const float a = static_cast<float>(0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * freq * u + phase));
          for (int c = 0; c < 3; ++c) {
            const double v = (1.0f - a) * base[c] + a * accent[c] + 0.04 * normal(irng);
            img.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      // Quantize now so the in-memory store equals what a raw file holds.
      img = from_bytes(image_size, image_size, to_bytes(img));

      char name[64];
      std::snprintf(name, sizeof name, "images/%s_%03d.raw", id.c_str(), k);
      out.records.push_back({id, age, gender, false, Aspect::dorsal_right, name});
      out.pixels.emplace(name, std::move(img));
    }
  }
  return out;
}

std::vector<Sample> to_samples(const SynthDataset& data, const LabelMaps& maps) {
  std::vector<Sample> out;
  out.reserve(data.records.size());
  for (const auto& r : data.records) out.push_back({data.pixels.at(r.image_path), maps.encode(r), r.image_path});
  return out;
}

void write_synth_dataset(const std::filesystem::path& dir, const SynthDataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
  write_manifest(dir / "manifest.csv", data.records);
  for (const auto& [path, img] : data.pixels) write_raw_image(dir / path, img);
}

const AspectStats& eleven_k_stats(Aspect aspect) {
  static const std::array<AspectStats, 4> stats = {{
      {143, 2004, 909, 1095, {372, 878, 414, 147, 114, 79}},
      {146, 1869, 846, 1023, {328, 852, 362, 162, 87, 78}},
      {143, 1965, 948, 1017, {371, 861, 418, 148, 95, 72}},
      {151, 2027, 949, 1078, {381, 890, 401, 180, 111, 64}},
  }};
  return stats[static_cast<std::size_t>(aspect)];
}

Records synth_statistics_manifest(std::uint64_t seed) {
  constexpr int kPool = 190;
  const AgeGroupScheme scheme;
  Records out;

  for (auto aspect : kAllAspects) {
    const auto& st = eleven_k_stats(aspect);
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(aspect), 11}));

    std::vector<int> pool(kPool);
    for (int i = 0; i < kPool; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
    shuffle(pool, rng);

    // Image counts per (gender, age group) cell by the north-west corner rule.
    struct Cell {
      Gender gender;
      int group;
      int images;
      int subjects = 1;
    };
    std::vector<Cell> cells;
    std::array<int, 2> row_left = {st.male, st.female};
    auto col_left = st.age_groups;
    for (int g = 0, a = 0; g < 2 && a < 6;) {
      const int take = std::min(row_left[static_cast<std::size_t>(g)], col_left[static_cast<std::size_t>(a)]);
      if (take > 0) cells.push_back({static_cast<Gender>(g), a, take});
      row_left[static_cast<std::size_t>(g)] -= take;
      col_left[static_cast<std::size_t>(a)] -= take;
      if (row_left[static_cast<std::size_t>(g)] == 0) ++g;
      else ++a;
    }

    // Spread subjects over cells roughly in proportion to image counts.
    int assigned = static_cast<int>(cells.size());
    while (assigned < st.identities) {
      Cell* best = nullptr;
      for (auto& c : cells)
        if (c.subjects < c.images &&
            (!best || static_cast<double>(c.images) / c.subjects > static_cast<double>(best->images) / best->subjects))
          best = &c;
      if (!best) throw ConfigError("cannot place subjects for statistics manifest");
      ++best->subjects;
      ++assigned;
    }

    std::size_t next_subject = 0;
    for (const auto& c : cells) {
      const auto& range = scheme.ranges()[static_cast<std::size_t>(c.group)];
      for (int s = 0; s < c.subjects; ++s) {
        char id[16];
        std::snprintf(id, sizeof id, "%07d", pool[next_subject++] * 7 + 1500);
        const int n = c.images / c.subjects + (s < c.images % c.subjects ? 1 : 0);
        const int age = range.lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(range.hi - range.lo + 1)));
        for (int k = 0; k < n; ++k) {
          char path[64];
          std::snprintf(path, sizeof path, "Hand_%s_%s_%02d.jpg", id, std::string(to_string(aspect)).c_str(), k);
          out.push_back({id, age, c.gender, false, aspect, path});
        }
        if (uniform01(rng) < 0.2) {
          char path[64];
          std::snprintf(path, sizeof path, "Hand_%s_%s_acc.jpg", id, std::string(to_string(aspect)).c_str());
          out.push_back({id, age, c.gender, true, aspect, path});
        }
      }
    }
    // Subjects seen in this aspect only while wearing accessories.
    for (int k = 0; k < 3 && next_subject < pool.size(); ++k) {
      char id[16];
      std::snprintf(id, sizeof id, "%07d", pool[next_subject++] * 7 + 1500);
      char path[64];
      std::snprintf(path, sizeof path, "Hand_%s_%s_acc.jpg", id, std::string(to_string(aspect)).c_str());
      out.push_back({id, 30, Gender::female, true, aspect, path});
    }
  }

  // Interleave aspects the way a real metadata file lists them.
  Rng rng(mix_seed({seed, 12}));
  shuffle(out, rng);
  return out;
}

}  // namespace igae
