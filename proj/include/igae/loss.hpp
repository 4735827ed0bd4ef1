#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "igae/errors.hpp"
#include "igae/model.hpp"

namespace igae {

struct LossConfig {
  double epsilon = 0.1;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("label smoothing epsilon must lie in [0, 1)");
  }
};

// Label-smoothed target over K classes: 1 - (K-1)/K * eps at the true class,
// eps / K elsewhere.
inline Eigen::VectorXd smoothed_targets(int label, int classes, double epsilon) {
  if (classes < 2) throw LabelError("need at least 2 classes, got " + std::to_string(classes));
  if (label < 0 || label >= classes)
    throw LabelError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
  LossConfig{epsilon}.validate();
  Eigen::VectorXd q = Eigen::VectorXd::Constant(classes, epsilon / classes);
  q(label) = 1.0 - (static_cast<double>(classes - 1) / classes) * epsilon;
  return q;
}

template <typename Scalar>
struct HeadLoss {
  double value = 0.0;
  Matrix<Scalar> grad;  // dL/dlogits, N x K
};

// Mean over the batch of -sum_c q_c log softmax(z)_c; the gradient is
// (softmax(z) - q) / N. Evaluated in double.
template <typename Scalar>
HeadLoss<Scalar> head_loss(const Matrix<Scalar>& logits, std::span<const int> labels, double epsilon) {
  const Eigen::Index n = logits.rows(), k = logits.cols();
  if (n == 0) throw DimensionError("head_loss on an empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DimensionError("got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");

  HeadLoss<Scalar> out;
  out.grad.resize(n, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd q = smoothed_targets(labels[static_cast<std::size_t>(i)], static_cast<int>(k), epsilon);
    const Eigen::VectorXd z = logits.row(i).transpose().template cast<double>();
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    // sum_c q_c (lse - z_c) with sum q = 1
    total += lse - q.dot(z);
    const Eigen::VectorXd p = (z.array() - lse).exp();
    out.grad.row(i) = ((p - q) / static_cast<double>(n)).transpose().template cast<Scalar>();
  }
  out.value = total / static_cast<double>(n);
  return out;
}

struct BatchLoss {
  double total = 0.0;
  std::array<double, 3> per_head{};
};

template <typename Scalar>
struct LossAndGrad {
  BatchLoss loss;
  std::array<Matrix<Scalar>, 3> grad;
};

using HeadLabels = std::array<std::vector<int>, 3>;

// Unweighted sum of the three head losses.
template <typename Scalar>
LossAndGrad<Scalar> total_loss(const std::array<Matrix<Scalar>, 3>& logits, const HeadLabels& labels,
                               double epsilon) {
  LossAndGrad<Scalar> out;
  for (auto h : kHeads) {
    auto hl = head_loss<Scalar>(logits[idx(h)], labels[idx(h)], epsilon);
    out.loss.per_head[idx(h)] = hl.value;
    out.grad[idx(h)] = std::move(hl.grad);
  }
  out.loss.total = out.loss.per_head[0] + out.loss.per_head[1] + out.loss.per_head[2];
  return out;
}

}  // namespace igae
