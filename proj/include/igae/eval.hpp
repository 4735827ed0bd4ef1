#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igae/augment.hpp"
#include "igae/dataman.hpp"
#include "igae/model.hpp"
#include "igae/sample.hpp"

namespace igae {

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows are ground truth, columns predictions.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  CountMatrix counts;

  long total() const { return counts.sum(); }
  long correct() const { return counts.trace(); }
  // trace / total; 0 for an empty matrix.
  double accuracy() const { return total() == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(total()); }
  std::vector<long> support() const;

  bool operator==(const ConfusionMatrix& o) const { return labels == o.labels && counts == o.counts; }
};

ConfusionMatrix make_confusion(std::vector<std::string> labels, std::span<const int> truth,
                               std::span<const int> predicted);

// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
int argmax(const Eigen::DenseBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = i;
  return static_cast<int>(best);
}

struct PredictionRecord {
  std::string sample;
  Labels truth;
  Labels predicted;
};

struct EvalReport {
  std::array<ConfusionMatrix, 3> confusion;
  std::vector<PredictionRecord> predictions;
  std::optional<double> rank1;

  double accuracy(Head h) const { return confusion[idx(h)].accuracy(); }
  std::size_t n_samples() const { return predictions.size(); }
};

// Assembles a report from per-head logits (N x C_t) and ground truth.
// Throws LabelError naming the sample for labels outside a head.
EvalReport build_report(const std::array<Eigen::MatrixXd, 3>& logits, std::span<const Labels> truth,
                        std::span<const std::string> names, const LabelMaps& maps);

// Eval-transforms each sample, runs the model and builds the report.
template <typename Scalar>
EvalReport evaluate(const ModelParams<Scalar>& params, std::span<const Sample> test, const LabelMaps& maps,
                    const AugmentConfig& aug, std::size_t batch_size = 64);

// Throws SimilarityError for a zero-norm input, DimensionError on mismatch.
double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

enum class FeatureSource { trunk_feature, identity_logits };

struct FeatureEntry {
  Eigen::VectorXd feature;
  std::string subject;
};

struct RankedMatch {
  std::size_t gallery_index;
  std::string subject;
  double similarity;
};

struct MatchResult {
  std::vector<std::vector<RankedMatch>> rankings;  // per query, best first
  double rank1 = 0.0;
};

// Ranks every gallery entry by descending cosine similarity to each query;
// equal similarities keep gallery order. Queries carry their true subject.
MatchResult open_set_match(std::span<const FeatureEntry> gallery, std::span<const FeatureEntry> queries);

// Eval-transformed features of each sample from the chosen source.
template <typename Scalar>
std::vector<FeatureEntry> extract_entries(const ModelParams<Scalar>& params, std::span<const Sample> samples,
                                          std::span<const std::string> subjects, const AugmentConfig& aug,
                                          FeatureSource source, std::size_t batch_size = 64);

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);
ConfusionMatrix read_confusion_csv(const std::filesystem::path& path);

// summary.json, confusion_{identity,gender,age}.csv, predictions.csv.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

// Accuracies as percentages with two decimals, one task per line.
std::string format_summary(const EvalReport& report);

}  // namespace igae
