#include "doctest.h"

#include <algorithm>
#include <fstream>
#include <set>

#include "igae/dataman.hpp"
#include "igae/errors.hpp"
#include "igae/synth.hpp"
#include "temp_dir.hpp"

using namespace igae;

namespace {

ManifestRecord rec(std::string id, int age = 21, bool acc = false, Aspect a = Aspect::dorsal_right,
                   std::string path = "") {
  if (path.empty()) path = id + ".jpg";
  return {std::move(id), age, Gender::female, acc, a, std::move(path)};
}

std::multiset<std::string> paths(const Records& r) {
  std::multiset<std::string> out;
  for (const auto& x : r) out.insert(x.image_path);
  return out;
}

}  // namespace

TEST_CASE("load_manifest reads rows in file order") {
  TempDir dir;
  const auto p = dir / "m.csv";
  std::ofstream(p) << "subject_id,age,gender,accessories,aspect,image_path\n"
                      "0000001,21,male,0,dorsal right,a.jpg\n"
                      "0000002,34,Female,1,palmar_left,b.jpg\n"
                      "0000001,21,MALE,0,Dorsal Left,c.jpg\n";
  const auto r = load_manifest(p);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == ManifestRecord{"0000001", 21, Gender::male, false, Aspect::dorsal_right, "a.jpg"});
  CHECK(r[1] == ManifestRecord{"0000002", 34, Gender::female, true, Aspect::palmar_left, "b.jpg"});
  CHECK(r[2].aspect == Aspect::dorsal_left);
  CHECK(r[2].image_path == "c.jpg");
}

TEST_CASE("unparsable age names the data row") {
  const std::string text =
      "subject_id,age,gender,accessories,aspect,image_path\n"
      "1,21,male,0,dorsal_right,a.jpg\n"
      "2,abc,male,0,dorsal_right,b.jpg\n";
  try {
    parse_manifest(text);
    FAIL("expected a row error");
  } catch (const RowError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("row-level errors for gender, aspect, accessories and age span") {
  const std::string head = "subject_id,age,gender,accessories,aspect,image_path\n";
  CHECK_THROWS_AS(parse_manifest(head + "1,21,other,0,dorsal_right,a\n"), RowError);
  CHECK_THROWS_AS(parse_manifest(head + "1,21,male,0,sideways,a\n"), RowError);
  CHECK_THROWS_AS(parse_manifest(head + "1,21,male,yes,dorsal_right,a\n"), RowError);
  CHECK_THROWS_AS(parse_manifest(head + "1,17,male,0,dorsal_right,a\n"), RowError);
  CHECK_THROWS_AS(parse_manifest(head + "1,76,male,0,dorsal_right,a\n"), RowError);
}

TEST_CASE("extra columns are ignored and required columns may be reordered") {
  // Fixture shaped like the public metadata file.
  const std::string text =
      "image_path,skinColor,aspect,accessories,gender,age,subject_id,nailPolish\n"
      "Hand_0000002.jpg,dark,dorsal right,0,male,27,0000000,0\n"
      "Hand_0000003.jpg,fair,palmar left,1,female,22,0000001,1\n";
  const auto r = parse_manifest(text);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == ManifestRecord{"0000000", 27, Gender::male, false, Aspect::dorsal_right, "Hand_0000002.jpg"});
  CHECK(r[1] == ManifestRecord{"0000001", 22, Gender::female, true, Aspect::palmar_left, "Hand_0000003.jpg"});
}

TEST_CASE("tab-separated manifests are accepted") {
  const auto r = parse_manifest("subject_id\tage\tgender\taccessories\taspect\timage_path\n7\t40\tfemale\t0\tpalmar right\tx\n");
  REQUIRE(r.size() == 1);
  CHECK(r[0].aspect == Aspect::palmar_right);
}

TEST_CASE("missing required column is a schema error") {
  CHECK_THROWS_AS(parse_manifest("subject_id,age,gender,aspect,image_path\n1,21,male,dorsal_right,a\n"), SchemaError);
  CHECK_THROWS_AS(parse_manifest(""), SchemaError);
}

TEST_CASE("write_manifest round-trips") {
  TempDir dir;
  const Records in = {rec("a", 19), rec("b", 44, true, Aspect::palmar_left), rec("a", 19, false, Aspect::dorsal_left)};
  write_manifest(dir / "m.csv", in);
  CHECK(load_manifest(dir / "m.csv") == in);
}

TEST_CASE("filter_accessories") {
  SUBCASE("one of three flagged") {
    const Records in = {rec("a"), rec("b", 21, true), rec("c")};
    const auto out = filter_accessories(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0].subject_id == "a");
    CHECK(out[1].subject_id == "c");
  }
  SUBCASE("nothing flagged is the identity") {
    const Records in = {rec("a"), rec("b"), rec("c")};
    CHECK(filter_accessories(in) == in);
  }
  SUBCASE("ten records, four flagged, order kept") {
    Records in;
    const std::set<int> flagged = {1, 4, 5, 9};
    for (int i = 0; i < 10; ++i) in.push_back(rec("s" + std::to_string(i), 21, flagged.count(i) > 0));
    Records expected;  // brute-force set difference
    for (int i = 0; i < 10; ++i)
      if (!flagged.count(i)) expected.push_back(in[static_cast<std::size_t>(i)]);
    const auto out = filter_accessories(in);
    CHECK(out.size() == 6);
    CHECK(out == expected);
  }
}

TEST_CASE("partition_by_aspect") {
  SUBCASE("all dorsal right") {
    const Records in = {rec("a"), rec("b"), rec("c")};
    const auto parts = partition_by_aspect(in);
    CHECK(parts.at(Aspect::dorsal_right).size() == 3);
    CHECK(parts.at(Aspect::dorsal_left).empty());
    CHECK(parts.at(Aspect::palmar_right).empty());
    CHECK(parts.at(Aspect::palmar_left).empty());
  }
  SUBCASE("every record lands in exactly one bucket") {
    Records in;
    for (int i = 0; i < 40; ++i) in.push_back(rec("s" + std::to_string(i % 7), 21, false, kAllAspects[static_cast<std::size_t>(i * 7 % 4)], "p" + std::to_string(i)));
    const auto parts = partition_by_aspect(in);
    std::multiset<std::string> all;
    for (const auto& [a, rs] : parts) {
      for (const auto& r : rs) CHECK(r.aspect == a);
      const auto p = paths(rs);
      all.insert(p.begin(), p.end());
    }
    CHECK(all == paths(in));
  }
}

TEST_CASE("statistics manifest reproduces per-aspect identity and image counts") {
  const auto parts = partition_by_aspect(filter_accessories(synth_statistics_manifest(3)));
  const auto& dr = parts.at(Aspect::dorsal_right);
  CHECK(dr.size() == 2004);
  CHECK(count_subjects(dr) == 143);
  const auto& pl = parts.at(Aspect::palmar_left);
  CHECK(pl.size() == 2027);
  CHECK(count_subjects(pl) == 151);
  for (auto a : kAllAspects) {
    const auto& st = eleven_k_stats(a);
    const auto& rs = parts.at(a);
    CHECK(static_cast<int>(rs.size()) == st.images);
    CHECK(static_cast<int>(count_subjects(rs)) == st.identities);
    CHECK(gender_support(rs) == std::vector<long>{st.male, st.female});
    const auto ages = age_support(rs);
    CHECK(std::equal(ages.begin(), ages.end(), st.age_groups.begin()));
  }
}

TEST_CASE("statistics manifest contains accessory-only subjects that vanish after filtering") {
  const auto all = synth_statistics_manifest(3);
  const auto dr_all = partition_by_aspect(all).at(Aspect::dorsal_right);
  CHECK(count_subjects(dr_all) > 143);
  const auto maps = LabelMaps::build(partition_by_aspect(filter_accessories(all)).at(Aspect::dorsal_right));
  CHECK(maps.identity_count() == 143);
}

TEST_CASE("bin_age follows the six groups") {
  const AgeGroupScheme scheme;
  CHECK(scheme.size() == 6);
  CHECK(scheme.labels() == std::vector<std::string>{"0-20", "21", "22", "23", "24-30", "31-75"});
  CHECK(bin_age(18) == 0);
  CHECK(bin_age(20) == 0);
  CHECK(bin_age(21) == 1);
  CHECK(bin_age(22) == 2);
  CHECK(bin_age(23) == 3);
  CHECK(bin_age(24) == 4);
  CHECK(bin_age(30) == 4);
  CHECK(bin_age(31) == 5);
  CHECK(bin_age(75) == 5);
  CHECK_THROWS_AS(bin_age(17), RangeError);
  CHECK_THROWS_AS(bin_age(76), RangeError);
}

TEST_CASE("bin_age is total on [18, 75] and each age hits exactly one range") {
  const AgeGroupScheme scheme;
  std::vector<long> counts(6, 0);
  for (int age = kMinAge; age <= kMaxAge; ++age) {
    int hits = 0;
    for (const auto& r : scheme.ranges()) hits += (age >= r.lo && age <= r.hi);
    CHECK(hits == 1);
    ++counts[static_cast<std::size_t>(bin_age(age))];
  }
  long total = 0;
  for (auto c : counts) total += c;
  CHECK(total == kMaxAge - kMinAge + 1);
}

TEST_CASE("invalid age schemes are rejected") {
  CHECK_THROWS_AS(AgeGroupScheme({{18, 30, "a"}, {30, 75, "b"}}), ConfigError);
  CHECK_THROWS_AS(AgeGroupScheme({{18, 30, "a"}, {31, 70, "b"}}), ConfigError);
  CHECK_NOTHROW(AgeGroupScheme({{18, 40, "young"}, {41, 75, "old"}}));
}

TEST_CASE("label maps are bijective and built from the filtered subjects") {
  const Records in = {rec("b"), rec("a"), rec("c", 21, true), rec("b")};
  const auto maps = LabelMaps::build(filter_accessories(in));
  CHECK(maps.identity_count() == 2);
  CHECK(maps.identity_index("a") == 0);
  CHECK(maps.identity_index("b") == 1);
  CHECK(maps.subject(1) == "b");
  CHECK_THROWS_AS(maps.identity_index("c"), LabelError);
  CHECK(maps.class_counts() == std::array<int, 3>{2, 2, 6});
  CHECK(maps.encode(ManifestRecord{"b", 23, Gender::female, false, Aspect::dorsal_right, "x"}) == Labels{1, 1, 3});

  TempDir dir;
  maps.save(dir / "labels.json");
  const auto back = LabelMaps::load(dir / "labels.json");
  CHECK(back.subjects() == maps.subjects());
  CHECK(back.age_names() == maps.age_names());
}

TEST_CASE("stratified_split sizes follow the ceil rule") {
  auto subject = [](const std::string& id, int n) {
    Records r;
    for (int i = 0; i < n; ++i) r.push_back(rec(id, 21, false, Aspect::dorsal_right, id + "_" + std::to_string(i)));
    return r;
  };
  SUBCASE("14 images split 7 / 7") {
    const auto s = stratified_split(subject("a", 14), {1, 0.5});
    CHECK(s.train.size() == 7);
    CHECK(s.test.size() == 7);
  }
  SUBCASE("odd counts put the extra image in train") {
    // Enumerated: n -> (ceil(n/2), floor(n/2)).
    for (int n = 1; n <= 9; ++n) {
      const auto s = stratified_split(subject("a", n), {1, 0.5});
      CHECK(static_cast<int>(s.train.size()) == (n + 1) / 2);
      CHECK(static_cast<int>(s.test.size()) == n / 2);
    }
    const auto s = stratified_split(subject("a", 5), {1, 0.5});
    CHECK(s.train.size() == 3);
    CHECK(s.test.size() == 2);
  }
  SUBCASE("other fractions") {
    const auto s = stratified_split(subject("a", 10), {1, 0.3});
    CHECK(s.train.size() == 3);
  }
  SUBCASE("fraction must be inside (0, 1)") {
    CHECK_THROWS_AS(stratified_split(subject("a", 4), {1, 1.0}), ConfigError);
    CHECK_THROWS_AS(stratified_split(subject("a", 4), {1, 0.0}), ConfigError);
  }
}

TEST_CASE("stratified_split is a seeded partition per subject") {
  Records in;
  for (int s = 0; s < 12; ++s)
    for (int k = 0; k < 2 + s % 5; ++k)
      in.push_back(rec("id" + std::to_string(s), 21, false, Aspect::dorsal_right,
                       "id" + std::to_string(s) + "_" + std::to_string(k)));

  const auto a = stratified_split(in, {11, 0.5});
  const auto a2 = stratified_split(in, {11, 0.5});
  const auto b = stratified_split(in, {12, 0.5});
  CHECK(a.train == a2.train);
  CHECK(a.test == a2.test);

  // Union is the input, intersection is empty.
  auto u = paths(a.train);
  const auto t = paths(a.test);
  for (const auto& p : t) CHECK(u.count(p) == 0);
  u.insert(t.begin(), t.end());
  CHECK(u == paths(in));

  // Same per-subject sizes, different membership, size gap <= 1.
  std::map<std::string, int> ta, tb, te;
  for (const auto& r : a.train) ++ta[r.subject_id];
  for (const auto& r : b.train) ++tb[r.subject_id];
  for (const auto& r : a.test) ++te[r.subject_id];
  CHECK(ta == tb);
  for (const auto& [id, n] : ta) CHECK(n - te[id] <= 1);
  CHECK(paths(a.train) != paths(b.train));
}
