#include "igae/dataman.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "igae/errors.hpp"
#include "igae/rng.hpp"
#include "json.hpp"

namespace igae {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::string_view to_string(Aspect a) {
  switch (a) {
    case Aspect::dorsal_right: return "dorsal_right";
    case Aspect::dorsal_left: return "dorsal_left";
    case Aspect::palmar_right: return "palmar_right";
    case Aspect::palmar_left: return "palmar_left";
  }
  return "?";
}

std::optional<Gender> parse_gender(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "male") return Gender::male;
  if (v == "female") return Gender::female;
  return std::nullopt;
}

std::optional<Aspect> parse_aspect(std::string_view s) {
  auto v = lower(trim(s));
  std::replace(v.begin(), v.end(), ' ', '_');
  for (auto a : kAllAspects)
    if (v == to_string(a)) return a;
  return std::nullopt;
}

Records parse_manifest(std::string_view text) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto pos = text.find('\n', start);
      if (pos == std::string_view::npos) pos = text.size();
      auto line = text.substr(start, pos - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = pos + 1;
    }
  }
  auto first = std::find_if(lines.begin(), lines.end(), [](auto l) { return !trim(l).empty(); });
  if (first == lines.end()) throw SchemaError("manifest has no header row");

  const char delim = first->find('\t') != std::string_view::npos ? '\t' : ',';
  const auto header = split_fields(*first, delim);
  std::array<std::size_t, kManifestColumns.size()> col{};
  for (std::size_t k = 0; k < kManifestColumns.size(); ++k) {
    auto it = std::find(header.begin(), header.end(), kManifestColumns[k]);
    if (it == header.end())
      throw SchemaError("manifest is missing required column '" + std::string(kManifestColumns[k]) + "'");
    col[k] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;

  Records out;
  std::size_t row = 0;
  for (auto it = first + 1; it != lines.end(); ++it) {
    if (trim(*it).empty()) continue;
    ++row;
    const auto f = split_fields(*it, delim);
    if (f.size() < needed)
      throw RowError(row, "expected at least " + std::to_string(needed) + " fields, got " +
                              std::to_string(f.size()));
    ManifestRecord r;
    r.subject_id = std::string(f[col[0]]);
    if (r.subject_id.empty()) throw RowError(row, "empty subject_id");

    const auto age_s = f[col[1]];
    int age = 0;
    const auto [ptr, ec] = std::from_chars(age_s.data(), age_s.data() + age_s.size(), age);
    if (ec != std::errc{} || ptr != age_s.data() + age_s.size())
      throw RowError(row, "unparsable age '" + std::string(age_s) + "'");
    if (age < kMinAge || age > kMaxAge)
      throw RowError(row, "age " + std::to_string(age) + " outside [18, 75]");
    r.age = age;

    const auto g = parse_gender(f[col[2]]);
    if (!g) throw RowError(row, "unparsable gender '" + std::string(f[col[2]]) + "'");
    r.gender = *g;

    const auto acc = f[col[3]];
    if (acc == "0") r.accessories = false;
    else if (acc == "1") r.accessories = true;
    else throw RowError(row, "accessories must be 0 or 1, got '" + std::string(acc) + "'");

    const auto a = parse_aspect(f[col[4]]);
    if (!a) throw RowError(row, "unparsable aspect '" + std::string(f[col[4]]) + "'");
    r.aspect = *a;

    r.image_path = std::string(f[col[5]]);
    out.push_back(std::move(r));
  }
  return out;
}

Records load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_manifest(ss.str());
}

void write_manifest(const std::filesystem::path& path, const Records& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write manifest " + path.string());
  os << "subject_id,age,gender,accessories,aspect,image_path\n";
  for (const auto& r : records)
    os << r.subject_id << ',' << r.age << ',' << to_string(r.gender) << ',' << (r.accessories ? 1 : 0)
       << ',' << to_string(r.aspect) << ',' << r.image_path << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

Records filter_accessories(const Records& records) {
  Records out;
  out.reserve(records.size());
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const ManifestRecord& r) { return !r.accessories; });
  return out;
}

std::map<Aspect, Records> partition_by_aspect(const Records& records) {
  std::map<Aspect, Records> out;
  for (auto a : kAllAspects) out[a];
  for (const auto& r : records) out[r.aspect].push_back(r);
  return out;
}

AgeGroupScheme::AgeGroupScheme()
    : AgeGroupScheme({{18, 20, "0-20"}, {21, 21, "21"}, {22, 22, "22"},
                      {23, 23, "23"}, {24, 30, "24-30"}, {31, 75, "31-75"}}) {}

AgeGroupScheme::AgeGroupScheme(std::vector<AgeRange> ranges) : ranges_(std::move(ranges)) {
  if (ranges_.empty()) throw ConfigError("age scheme needs at least one group");
  int expect = kMinAge;
  for (const auto& r : ranges_) {
    if (r.lo != expect || r.hi < r.lo)
      throw ConfigError("age groups must be ordered, disjoint and contiguous from 18");
    expect = r.hi + 1;
  }
  if (expect != kMaxAge + 1) throw ConfigError("age groups must cover [18, 75]");
}

std::vector<std::string> AgeGroupScheme::labels() const {
  std::vector<std::string> out;
  for (const auto& r : ranges_) out.push_back(r.label);
  return out;
}

int bin_age(int age, const AgeGroupScheme& scheme) {
  if (age < kMinAge || age > kMaxAge)
    throw RangeError("age " + std::to_string(age) + " outside [18, 75]");
  const auto& rs = scheme.ranges();
  for (std::size_t k = 0; k < rs.size(); ++k)
    if (age >= rs[k].lo && age <= rs[k].hi) return static_cast<int>(k);
  throw RangeError("age " + std::to_string(age) + " not covered by scheme");
}

LabelMaps LabelMaps::build(const Records& records, AgeGroupScheme scheme) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.subject_id);
  return from_subjects({ids.begin(), ids.end()}, std::move(scheme));
}

LabelMaps LabelMaps::from_subjects(std::vector<std::string> subjects, AgeGroupScheme scheme) {
  LabelMaps m;
  std::sort(subjects.begin(), subjects.end());
  if (std::adjacent_find(subjects.begin(), subjects.end()) != subjects.end())
    throw LabelError("duplicate subject id in identity map");
  m.subjects_ = std::move(subjects);
  for (std::size_t i = 0; i < m.subjects_.size(); ++i) m.index_[m.subjects_[i]] = static_cast<int>(i);
  m.scheme_ = std::move(scheme);
  return m;
}

int LabelMaps::identity_index(const std::string& subject) const {
  auto it = index_.find(subject);
  if (it == index_.end()) throw LabelError("subject '" + subject + "' is not in the identity map");
  return it->second;
}

Labels LabelMaps::encode(const ManifestRecord& r) const {
  return {identity_index(r.subject_id), static_cast<int>(r.gender), bin_age(r.age, scheme_)};
}

void LabelMaps::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["identity"] = subjects_;
  j["gender"] = gender_names();
  auto& age = j["age"] = nlohmann::json::array();
  for (const auto& r : scheme_.ranges()) age.push_back({{"label", r.label}, {"lo", r.lo}, {"hi", r.hi}});
  std::ofstream os(path);
  if (!os) throw IoError("cannot write label map " + path.string());
  os << j.dump(2) << '\n';
}

LabelMaps LabelMaps::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open label map " + path.string());
  try {
    const auto j = nlohmann::json::parse(is);
    std::vector<AgeRange> ranges;
    for (const auto& a : j.at("age"))
      ranges.push_back({a.at("lo").get<int>(), a.at("hi").get<int>(), a.at("label").get<std::string>()});
    return from_subjects(j.at("identity").get<std::vector<std::string>>(), AgeGroupScheme(std::move(ranges)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Split stratified_split(const Records& records, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");

  // Subjects in order of first appearance; each keeps its record indices.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& m = members[records[i].subject_id];
    if (m.empty()) order.push_back(records[i].subject_id);
    m.push_back(i);
  }

  std::vector<char> to_train(records.size(), 0);
  for (std::size_t s = 0; s < order.size(); ++s) {
    auto idx = members[order[s]];
    Rng rng(mix_seed({spec.seed, fnv1a(order[s])}));
    shuffle(idx, rng);
    const auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(idx.size()) * spec.train_fraction - 1e-9));
    for (std::size_t k = 0; k < n_train; ++k) to_train[idx[k]] = 1;
  }

  Split out;
  for (std::size_t i = 0; i < records.size(); ++i) (to_train[i] ? out.train : out.test).push_back(records[i]);
  return out;
}

std::vector<long> gender_support(const Records& records) {
  std::vector<long> s(2, 0);
  for (const auto& r : records) ++s[static_cast<std::size_t>(r.gender)];
  return s;
}

std::vector<long> age_support(const Records& records, const AgeGroupScheme& scheme) {
  std::vector<long> s(static_cast<std::size_t>(scheme.size()), 0);
  for (const auto& r : records) ++s[static_cast<std::size_t>(bin_age(r.age, scheme))];
  return s;
}

std::size_t count_subjects(const Records& records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.subject_id);
  return ids.size();
}

}  // namespace igae
