#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "igae/errors.hpp"
#include "igae/eval.hpp"
#include "igae/rng.hpp"
#include "igae/synth.hpp"
#include "json.hpp"
#include "temp_dir.hpp"

using namespace igae;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

LabelMaps three_subjects() { return LabelMaps::from_subjects({"A", "B", "C"}); }

// One-hot logits predicting exactly `pred` for every head.
std::array<Eigen::MatrixXd, 3> one_hot(const std::vector<Labels>& pred, const LabelMaps& maps) {
  const auto k = maps.class_counts();
  std::array<Eigen::MatrixXd, 3> z;
  for (std::size_t t = 0; t < 3; ++t) z[t] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pred.size()), k[t]);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    z[0](r, pred[i].identity) = 1;
    z[1](r, pred[i].gender) = 1;
    z[2](r, pred[i].age) = 1;
  }
  return z;
}

std::vector<std::string> names_for(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("img" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("argmax picks the lowest index on ties") {
  Eigen::VectorXd v(4);
  v << 1, 3, 3, 2;
  CHECK(argmax(v) == 1);
}

TEST_CASE("perfect predictions give diagonal matrices and 100%") {
  const auto maps = three_subjects();
  std::vector<Labels> truth = {{0, 0, 0}, {1, 1, 2}, {2, 0, 5}, {1, 1, 3}};
  const auto names = names_for(truth.size());
  const auto r = build_report(one_hot(truth, maps), truth, names, maps);
  for (auto h : kHeads) {
    const auto& cm = r.confusion[idx(h)];
    CHECK(r.accuracy(h) == 1.0);
    CHECK(cm.counts.sum() == cm.counts.diagonal().sum());
  }
  CHECK(r.confusion[2].counts.rows() == 6);
  CHECK(r.n_samples() == 4);
}

TEST_CASE("nine of ten correct is 90%") {
  const auto maps = three_subjects();
  std::vector<Labels> truth(10, Labels{0, 1, 0}), pred = truth;
  pred[3].gender = 0;
  const auto names = names_for(10);
  const auto r = build_report(one_hot(pred, maps), truth, names, maps);
  CHECK(r.accuracy(Head::gender) == 0.9);
  CHECK(r.accuracy(Head::identity) == 1.0);
  CHECK(r.confusion[1].counts(1, 0) == 1);
  CHECK(r.confusion[1].support() == std::vector<long>{0, 10});
  CHECK(format_summary(r).find("90.00") != std::string::npos);
}

TEST_CASE("accuracy equals trace over total on random fixtures") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 9));
    const int n = 1 + static_cast<int>(uniform_index(rng, 200));
    std::vector<int> t(n), p(n);
    long hits = 0;
    for (int i = 0; i < n; ++i) {
      t[i] = static_cast<int>(uniform_index(rng, k));
      p[i] = uniform01(rng) < 0.4 ? t[i] : static_cast<int>(uniform_index(rng, k));
      hits += t[i] == p[i];
    }
    std::vector<std::string> labels;
    for (int c = 0; c < k; ++c) labels.push_back("c" + std::to_string(c));
    const auto cm = make_confusion(labels, t, p);
    CHECK(cm.total() == n);
    CHECK(cm.correct() == hits);
    CHECK(cm.accuracy() == static_cast<double>(hits) / n);
  }
}

TEST_CASE("labels outside the map are reported with the sample name") {
  const auto maps = three_subjects();
  std::vector<Labels> truth = {{0, 0, 0}, {7, 0, 0}};
  const auto names = names_for(2);
  try {
    build_report(one_hot({{0, 0, 0}, {0, 0, 0}}, maps), truth, names, maps);
    FAIL("expected LabelError");
  } catch (const LabelError& e) {
    CHECK(std::string(e.what()).find("img1") != std::string::npos);
  }
  CHECK_THROWS_AS(make_confusion({"a", "b"}, std::vector<int>{0, 2}, std::vector<int>{0, 1}), LabelError);
}

TEST_CASE("cosine similarity") {
  Eigen::VectorXd a(3), b(3), z = Eigen::VectorXd::Zero(3);
  a << 1, 0, 0;
  b << 0, 2, 0;
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0));
  CHECK(cosine_similarity(a, 5.0 * a + b) == doctest::Approx(5.0 / std::sqrt(29.0)));
  CHECK_THROWS_AS(cosine_similarity(a, z), SimilarityError);
  CHECK_THROWS_AS(cosine_similarity(a, Eigen::VectorXd::Ones(2)), DimensionError);
}

TEST_CASE("open-set matching") {
  Rng rng(9);
  std::vector<FeatureEntry> gallery;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd f(5);
    for (auto& x : f) x = normal(rng);
    gallery.push_back({f, "S" + std::to_string(i % 4)});
  }
  std::vector<FeatureEntry> queries = {gallery[5], gallery[2]};
  auto res = open_set_match(gallery, queries);
  CHECK(res.rankings[0].front().gallery_index == 5);
  CHECK(res.rankings[0].front().similarity == doctest::Approx(1.0));
  CHECK(res.rankings[0].size() == gallery.size());
  CHECK(res.rank1 == 1.0);
  for (std::size_t i = 1; i < res.rankings[1].size(); ++i)
    CHECK(res.rankings[1][i - 1].similarity >= res.rankings[1][i].similarity);

  auto scaled = gallery;
  for (auto& g : scaled) g.feature *= 3.5;
  const auto res2 = open_set_match(scaled, queries);
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t i = 0; i < gallery.size(); ++i)
      CHECK(res2.rankings[q][i].gallery_index == res.rankings[q][i].gallery_index);

  std::vector<FeatureEntry> single = {gallery[0]};
  const auto one = open_set_match(single, queries);
  CHECK(one.rankings[1].size() == 1);
  CHECK(one.rank1 == 0.0);

  std::vector<FeatureEntry> wrong = {{Eigen::VectorXd::Ones(3), "X"}};
  CHECK_THROWS_AS(open_set_match(gallery, wrong), DimensionError);
}

TEST_CASE("confusion CSV has K+1 rows and round-trips") {
  TempDir dir;
  const auto cm = make_confusion({"0-20", "21", "31-75"}, std::vector<int>{0, 1, 2, 2}, std::vector<int>{0, 2, 2, 1});
  write_confusion_csv(dir / "c.csv", cm);
  const auto text = slurp(dir / "c.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(read_confusion_csv(dir / "c.csv") == cm);
}

TEST_CASE("emitted report is complete and deterministic") {
  const auto maps = three_subjects();
  std::vector<Labels> truth = {{0, 0, 0}, {1, 1, 2}, {2, 0, 5}};
  std::vector<Labels> pred = {{0, 0, 0}, {2, 1, 2}, {2, 1, 4}};
  const auto names = names_for(3);
  auto r = build_report(one_hot(pred, maps), truth, names, maps);
  r.rank1 = 0.5;
  TempDir a, b;
  emit_report(r, a.path());
  emit_report(r, b.path());
  for (const char* f : {"summary.json", "confusion_identity.csv", "confusion_gender.csv", "confusion_age.csv",
                        "predictions.csv"}) {
    CHECK(std::filesystem::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto j = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(j["identity_acc"].get<double>() == 2.0 / 3.0);
  CHECK(j["gender_acc"].get<double>() == 2.0 / 3.0);
  CHECK(j["age_acc"].get<double>() == 2.0 / 3.0);
  CHECK(j["n_samples"] == 3);
  CHECK(j["rank1"].get<double>() == 0.5);
  for (auto h : kHeads) CHECK(read_confusion_csv(a / ("confusion_" + std::string(head_name(h)) + ".csv")) == r.confusion[idx(h)]);
  const auto preds = slurp(a / "predictions.csv");
  CHECK(std::count(preds.begin(), preds.end(), '\n') == 4);
  CHECK(preds.find("img2,C,C,male,female,31-75,24-30") != std::string::npos);
}

TEST_CASE("evaluate and feature extraction on a model") {
  const auto data = synth_dataset(3, 2, 24, 1);
  const auto maps = LabelMaps::build(data.records);
  const auto samples = to_samples(data, maps);
  AugmentConfig aug;
  aug.resize = 16;
  aug.crop = 16;
  const auto p = init_params<float>(BackboneSpec{16, {4}}, maps.class_counts(), 3);
  const auto r1 = evaluate(p, samples, maps, aug, 4);
  const auto r2 = evaluate(p, samples, maps, aug, 64);
  CHECK(r1.n_samples() == 6);
  for (auto h : kHeads) CHECK(r1.confusion[idx(h)] == r2.confusion[idx(h)]);

  std::vector<std::string> subjects;
  for (const auto& r : data.records) subjects.push_back(r.subject_id);
  const auto trunk = extract_entries(p, samples, subjects, aug, FeatureSource::trunk_feature);
  const auto idl = extract_entries(p, samples, subjects, aug, FeatureSource::identity_logits);
  CHECK(trunk.front().feature.size() == 4);
  CHECK(idl.front().feature.size() == 3);
  CHECK(trunk[5].subject == subjects[5]);
}
