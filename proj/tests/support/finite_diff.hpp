#pragma once

// Central finite-difference oracle for the joint loss. Uses only forward()
// and the loss value, never backward().

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "igae/loss.hpp"
#include "igae/model.hpp"

namespace igae::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

inline double joint_loss(const ModelParams<double>& p, std::span<const Image> images, const HeadLabels& labels,
                         double epsilon) {
  const auto out = forward<double>(p, images);
  return total_loss<double>(out.logits, labels, epsilon).loss.total;
}

// Relative error |a - n| / max(|a|, |n|, floor) for every coordinate.
inline GradCheck check_gradients(const ModelParams<double>& params, const ModelParams<double>& analytic,
                                 std::span<const Image> images, const HeadLabels& labels, double epsilon,
                                 double step = 1e-5, double floor = 1e-8) {
  GradCheck result;
  ModelParams<double> probe = params;
  auto ptensors = probe.tensors();
  const auto gtensors = analytic.tensors();
  for (std::size_t i = 0; i < ptensors.size(); ++i) {
    for (std::size_t j = 0; j < ptensors[i].data.size(); ++j) {
      const double orig = ptensors[i].data[j];
      ptensors[i].data[j] = orig + step;
      const double up = joint_loss(probe, images, labels, epsilon);
      ptensors[i].data[j] = orig - step;
      const double down = joint_loss(probe, images, labels, epsilon);
      ptensors[i].data[j] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = gtensors[i].data[j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = ptensors[i].name + "[" + std::to_string(j) + "]";
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace igae::testing
