#include "igae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "igae/errors.hpp"
#include "json.hpp"

namespace igae {
namespace {

void check_open(const std::ofstream& os, const std::filesystem::path& p) {
  if (!os) throw IoError("cannot write " + p.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename Scalar>
std::vector<ForwardResult<Scalar>> run_batches(const ModelParams<Scalar>& params, std::span<const Sample> samples,
                                               const AugmentConfig& aug, std::size_t batch_size) {
  std::vector<ForwardResult<Scalar>> out;
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<Image> images;
    for (std::size_t i = start; i < end; ++i) images.push_back(augment_eval(samples[i].pixels, aug));
    out.push_back(forward<Scalar>(params, images));
  }
  return out;
}

}  // namespace

std::vector<long> ConfusionMatrix::support() const {
  std::vector<long> s(static_cast<std::size_t>(counts.rows()));
  for (Eigen::Index r = 0; r < counts.rows(); ++r) s[static_cast<std::size_t>(r)] = counts.row(r).sum();
  return s;
}

ConfusionMatrix make_confusion(std::vector<std::string> labels, std::span<const int> truth,
                               std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw DimensionError("truth and prediction counts differ");
  const auto k = static_cast<Eigen::Index>(labels.size());
  ConfusionMatrix cm{std::move(labels), CountMatrix::Zero(k, k)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
      throw LabelError("class index outside confusion matrix at sample " + std::to_string(i));
    ++cm.counts(truth[i], predicted[i]);
  }
  return cm;
}

EvalReport build_report(const std::array<Eigen::MatrixXd, 3>& logits, std::span<const Labels> truth,
                        std::span<const std::string> names, const LabelMaps& maps) {
  const std::array<std::vector<std::string>, 3> label_names = {maps.identity_names(), LabelMaps::gender_names(),
                                                               maps.age_names()};
  const auto n = truth.size();
  if (names.size() != n) throw DimensionError("sample name count does not match labels");
  for (std::size_t t = 0; t < 3; ++t) {
    if (static_cast<std::size_t>(logits[t].rows()) != n)
      throw DimensionError("logit rows do not match sample count");
    if (logits[t].cols() != static_cast<Eigen::Index>(label_names[t].size()))
      throw DimensionError(std::string(head_name(kHeads[t])) + " head width does not match the label map");
  }

  EvalReport report;
  std::array<std::vector<int>, 3> gt, pr;
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<int, 3> y = {truth[i].identity, truth[i].gender, truth[i].age};
    std::array<int, 3> p{};
    for (std::size_t t = 0; t < 3; ++t) {
      if (y[t] < 0 || y[t] >= static_cast<int>(label_names[t].size()))
        throw LabelError("sample '" + names[i] + "' has " + std::string(head_name(kHeads[t])) + " label " +
                         std::to_string(y[t]) + " outside the label map");
      p[t] = argmax(logits[t].row(static_cast<Eigen::Index>(i)));
      gt[t].push_back(y[t]);
      pr[t].push_back(p[t]);
    }
    report.predictions.push_back({names[i], truth[i], {p[0], p[1], p[2]}});
  }
  for (std::size_t t = 0; t < 3; ++t) report.confusion[t] = make_confusion(label_names[t], gt[t], pr[t]);
  return report;
}

template <typename Scalar>
EvalReport evaluate(const ModelParams<Scalar>& params, std::span<const Sample> test, const LabelMaps& maps,
                    const AugmentConfig& aug, std::size_t batch_size) {
  if (params.class_counts() != maps.class_counts())
    throw DimensionError("model head sizes do not match the label map");
  std::array<Eigen::MatrixXd, 3> logits;
  for (std::size_t t = 0; t < 3; ++t)
    logits[t].resize(static_cast<Eigen::Index>(test.size()), params.class_counts()[t]);
  Eigen::Index row = 0;
  for (const auto& out : run_batches(params, test, aug, batch_size)) {
    for (std::size_t t = 0; t < 3; ++t)
      logits[t].middleRows(row, out.logits[t].rows()) = out.logits[t].template cast<double>();
    row += out.features.rows();
  }
  std::vector<Labels> truth;
  std::vector<std::string> names;
  for (const auto& s : test) {
    truth.push_back(s.labels);
    names.push_back(s.name);
  }
  return build_report(logits, truth, names, maps);
}

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size())
    throw DimensionError("feature sizes differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw SimilarityError("cosine similarity is undefined for a zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

MatchResult open_set_match(std::span<const FeatureEntry> gallery, std::span<const FeatureEntry> queries) {
  if (gallery.empty()) throw DimensionError("gallery is empty");
  MatchResult out;
  std::size_t hits = 0;
  for (const auto& q : queries) {
    std::vector<RankedMatch> ranked;
    ranked.reserve(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g)
      ranked.push_back({g, gallery[g].subject, cosine_similarity(q.feature, gallery[g].feature)});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedMatch& a, const RankedMatch& b) { return a.similarity > b.similarity; });
    if (ranked.front().subject == q.subject) ++hits;
    out.rankings.push_back(std::move(ranked));
  }
  out.rank1 = queries.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(queries.size());
  return out;
}

template <typename Scalar>
std::vector<FeatureEntry> extract_entries(const ModelParams<Scalar>& params, std::span<const Sample> samples,
                                          std::span<const std::string> subjects, const AugmentConfig& aug,
                                          FeatureSource source, std::size_t batch_size) {
  if (subjects.size() != samples.size()) throw DimensionError("subject count does not match samples");
  std::vector<FeatureEntry> out;
  for (const auto& res : run_batches(params, samples, aug, batch_size)) {
    const auto& m = source == FeatureSource::trunk_feature ? res.features : res.head_logits(Head::identity);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      out.push_back({m.row(r).transpose().template cast<double>(), subjects[out.size()]});
  }
  return out;
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  std::ofstream os(path);
  check_open(os, path);
  os << "truth\\predicted";
  for (const auto& l : cm.labels) os << ',' << l;
  os << '\n';
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r) {
    os << cm.labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cm.counts.cols(); ++c) os << ',' << cm.counts(r, c);
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

ConfusionMatrix read_confusion_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
  auto header = split_csv(line);
  if (header.empty()) throw IoError(path.string() + ": bad header");
  ConfusionMatrix cm;
  cm.labels.assign(header.begin() + 1, header.end());
  const auto k = static_cast<Eigen::Index>(cm.labels.size());
  cm.counts = CountMatrix::Zero(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    if (!std::getline(is, line)) throw IoError(path.string() + ": missing row " + std::to_string(r));
    const auto f = split_csv(line);
    if (static_cast<Eigen::Index>(f.size()) != k + 1 || f[0] != cm.labels[static_cast<std::size_t>(r)])
      throw IoError(path.string() + ": malformed row " + std::to_string(r + 1));
    for (Eigen::Index c = 0; c < k; ++c) cm.counts(r, c) = std::stol(f[static_cast<std::size_t>(c + 1)]);
  }
  return cm;
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json j;
  j["identity_acc"] = report.accuracy(Head::identity);
  j["gender_acc"] = report.accuracy(Head::gender);
  j["age_acc"] = report.accuracy(Head::age);
  j["n_samples"] = report.n_samples();
  if (report.rank1) j["rank1"] = *report.rank1;
  {
    const auto p = dir / "summary.json";
    std::ofstream os(p);
    check_open(os, p);
    os << j.dump(2) << '\n';
  }
  for (auto h : kHeads)
    write_confusion_csv(dir / ("confusion_" + std::string(head_name(h)) + ".csv"), report.confusion[idx(h)]);

  const auto p = dir / "predictions.csv";
  std::ofstream os(p);
  check_open(os, p);
  const auto& cm = report.confusion;
  os << "sample,gt_identity,pr_identity,gt_gender,pr_gender,gt_age,pr_age\n";
  for (const auto& r : report.predictions) {
    auto name = [&](Head h, int i) -> const std::string& { return cm[idx(h)].labels[static_cast<std::size_t>(i)]; };
    os << r.sample << ',' << name(Head::identity, r.truth.identity) << ',' << name(Head::identity, r.predicted.identity)
       << ',' << name(Head::gender, r.truth.gender) << ',' << name(Head::gender, r.predicted.gender) << ','
       << name(Head::age, r.truth.age) << ',' << name(Head::age, r.predicted.age) << '\n';
  }
  if (!os) throw IoError("write failed for " + p.string());
}

std::string format_summary(const EvalReport& report) {
  std::ostringstream os;
  char buf[96];
  for (auto h : kHeads) {
    std::snprintf(buf, sizeof buf, "%-8s accuracy: %6.2f%%\n", std::string(head_name(h)).c_str(),
                  100.0 * report.accuracy(h));
    os << buf;
  }
  if (report.rank1) {
    std::snprintf(buf, sizeof buf, "rank-1 match:     %6.2f%%\n", 100.0 * *report.rank1);
    os << buf;
  }
  os << "samples: " << report.n_samples() << '\n';
  return os.str();
}

template EvalReport evaluate<float>(const ModelParams<float>&, std::span<const Sample>, const LabelMaps&,
                                    const AugmentConfig&, std::size_t);
template EvalReport evaluate<double>(const ModelParams<double>&, std::span<const Sample>, const LabelMaps&,
                                     const AugmentConfig&, std::size_t);
template std::vector<FeatureEntry> extract_entries<float>(const ModelParams<float>&, std::span<const Sample>,
                                                          std::span<const std::string>, const AugmentConfig&,
                                                          FeatureSource, std::size_t);
template std::vector<FeatureEntry> extract_entries<double>(const ModelParams<double>&, std::span<const Sample>,
                                                           std::span<const std::string>, const AugmentConfig&,
                                                           FeatureSource, std::size_t);

}  // namespace igae
