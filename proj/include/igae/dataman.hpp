#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace igae {

enum class Gender { male = 0, female = 1 };

enum class Aspect { dorsal_right = 0, dorsal_left = 1, palmar_right = 2, palmar_left = 3 };

inline constexpr std::array<Aspect, 4> kAllAspects = {Aspect::dorsal_right, Aspect::dorsal_left,
                                                      Aspect::palmar_right, Aspect::palmar_left};

std::string_view to_string(Gender g);
std::string_view to_string(Aspect a);
// Accepts "male"/"female" in any case.
std::optional<Gender> parse_gender(std::string_view s);
// Accepts "dorsal right", "dorsal_right" (any case, surrounding blanks ignored).
std::optional<Aspect> parse_aspect(std::string_view s);

inline constexpr int kMinAge = 18;
inline constexpr int kMaxAge = 75;

struct ManifestRecord {
  std::string subject_id;
  int age = kMinAge;
  Gender gender = Gender::male;
  bool accessories = false;
  Aspect aspect = Aspect::dorsal_right;
  std::string image_path;

  bool operator==(const ManifestRecord&) const = default;
};

using Records = std::vector<ManifestRecord>;

// Required header columns. Order in the file is free; extra columns are
// ignored. Fields are comma separated, or tab separated when the header
// line contains a tab.
inline constexpr std::array<std::string_view, 6> kManifestColumns = {
    "subject_id", "age", "gender", "accessories", "aspect", "image_path"};

// Throws SchemaError for a missing column and RowError (1-based data row
// index) for an unparsable field.
Records load_manifest(const std::filesystem::path& path);
Records parse_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& path, const Records& records);

Records filter_accessories(const Records& records);

std::map<Aspect, Records> partition_by_aspect(const Records& records);

struct AgeRange {
  int lo;  // inclusive
  int hi;  // inclusive
  std::string label;
};

// Ordered, disjoint integer ranges covering [kMinAge, kMaxAge]. The default
// scheme has the six groups "0-20", "21", "22", "23", "24-30", "31-75"; the
// first group's label keeps its conventional name although no age below
// kMinAge is admitted.
class AgeGroupScheme {
 public:
  AgeGroupScheme();
  explicit AgeGroupScheme(std::vector<AgeRange> ranges);

  int size() const { return static_cast<int>(ranges_.size()); }
  const std::vector<AgeRange>& ranges() const { return ranges_; }
  std::vector<std::string> labels() const;

 private:
  std::vector<AgeRange> ranges_;
};

// Throws RangeError for ages outside [kMinAge, kMaxAge] or not covered.
int bin_age(int age, const AgeGroupScheme& scheme = AgeGroupScheme{});

struct Labels {
  int identity = 0;
  int gender = 0;
  int age = 0;

  bool operator==(const Labels&) const = default;
};

// Class index tables for the three heads. Identity indices follow the
// lexicographic order of subject ids.
class LabelMaps {
 public:
  LabelMaps() = default;
  static LabelMaps build(const Records& records, AgeGroupScheme scheme = AgeGroupScheme{});
  static LabelMaps from_subjects(std::vector<std::string> subjects,
                                 AgeGroupScheme scheme = AgeGroupScheme{});

  int identity_count() const { return static_cast<int>(subjects_.size()); }
  static constexpr int gender_count() { return 2; }
  int age_count() const { return scheme_.size(); }
  std::array<int, 3> class_counts() const { return {identity_count(), gender_count(), age_count()}; }

  // Throws LabelError for an unknown subject.
  int identity_index(const std::string& subject) const;
  const std::string& subject(int index) const { return subjects_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& subjects() const { return subjects_; }
  const AgeGroupScheme& scheme() const { return scheme_; }

  Labels encode(const ManifestRecord& r) const;

  // Label names per head, in class-index order.
  std::vector<std::string> identity_names() const { return subjects_; }
  static std::vector<std::string> gender_names() { return {"male", "female"}; }
  std::vector<std::string> age_names() const { return scheme_.labels(); }

  void save(const std::filesystem::path& path) const;
  static LabelMaps load(const std::filesystem::path& path);

 private:
  std::vector<std::string> subjects_;
  std::map<std::string, int> index_;
  AgeGroupScheme scheme_;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
};

struct Split {
  Records train;
  Records test;
};

// Per subject: shuffle that subject's records by seed, then send
// ceil(n * fraction) to train and the rest to test. Both outputs keep the
// input's relative order.
Split stratified_split(const Records& records, const SplitSpec& spec);

// Per-class support counts.
std::vector<long> gender_support(const Records& records);
std::vector<long> age_support(const Records& records, const AgeGroupScheme& scheme = AgeGroupScheme{});
std::size_t count_subjects(const Records& records);

}  // namespace igae
