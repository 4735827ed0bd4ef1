#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "igae/errors.hpp"
#include "igae/model.hpp"

namespace igae {

// Per-epoch schedule: linear warmup from warmup_start to base_lr over
// warmup_epochs, base_lr through decay_epoch inclusive, decayed_lr after.
struct LrSchedule {
  double base_lr = 8e-4;
  double warmup_start = 8e-6;
  int warmup_epochs = 10;
  int decay_epoch = 30;
  double decayed_lr = 4e-4;
  int total_epochs = 50;

  void validate() const {
    if (!(warmup_start <= base_lr)) throw ConfigError("warmup_start must not exceed base_lr");
    if (!(decayed_lr <= base_lr)) throw ConfigError("decayed_lr must not exceed base_lr");
    if (warmup_epochs < 0 || decay_epoch < warmup_epochs) throw ConfigError("decay_epoch must be >= warmup_epochs >= 0");
    if (total_epochs < 1) throw ConfigError("total_epochs must be positive");
  }
};

inline double lr_at(int epoch, const LrSchedule& s) {
  if (epoch < 0 || epoch >= s.total_epochs)
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(s.total_epochs) + ")");
  if (epoch < s.warmup_epochs)
    return s.warmup_start + (s.base_lr - s.warmup_start) * (static_cast<double>(epoch) / s.warmup_epochs);
  if (epoch <= s.decay_epoch) return s.base_lr;
  return s.decayed_lr;
}

enum class ParamGroup { backbone, heads };

struct ParamGroups {
  std::map<std::string, ParamGroup> group_of;
  double backbone_multiplier = 0.1;
  double heads_multiplier = 1.0;

  double multiplier(ParamGroup g) const { return g == ParamGroup::backbone ? backbone_multiplier : heads_multiplier; }

  double rate(const std::string& name, double lr) const {
    auto it = group_of.find(name);
    if (it == group_of.end()) throw GroupingError("parameter '" + name + "' is not in any group");
    return lr * multiplier(it->second);
  }

  std::vector<std::string> members(ParamGroup g) const {
    std::vector<std::string> out;
    for (const auto& [name, grp] : group_of)
      if (grp == g) out.push_back(name);
    return out;
  }
};

// "head.*" tensors train at the full rate, "backbone.*" at a tenth of it.
inline ParamGroups make_param_groups(const std::vector<std::string>& names, double backbone_multiplier = 0.1) {
  ParamGroups g;
  g.backbone_multiplier = backbone_multiplier;
  for (const auto& n : names) {
    ParamGroup grp;
    if (n.starts_with("head.")) grp = ParamGroup::heads;
    else if (n.starts_with("backbone.")) grp = ParamGroup::backbone;
    else throw GroupingError("cannot group parameter '" + n + "'");
    if (!g.group_of.emplace(n, grp).second) throw GroupingError("duplicate parameter name '" + n + "'");
  }
  return g;
}

template <typename Scalar>
ParamGroups make_param_groups(const ModelParams<Scalar>& params, double backbone_multiplier = 0.1) {
  std::vector<std::string> names;
  for (const auto& t : params.tensors()) names.push_back(t.name);
  return make_param_groups(names, backbone_multiplier);
}

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double delta = 1e-8;
  double weight_decay = 5e-4;
};

// Single-coordinate update at 1-based step t; m and v are updated in place.
inline double adam_update(double theta, double grad, double& m, double& v, long t, double rate,
                          const AdamHyper& hyper) {
  const double g = grad + hyper.weight_decay * theta;
  m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
  v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g;
  const double mhat = m / (1.0 - std::pow(hyper.beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(hyper.beta2, static_cast<double>(t)));
  return theta - rate * mhat / (std::sqrt(vhat) + hyper.delta);
}

template <typename Scalar>
struct AdamState {
  std::map<std::string, Vector<Scalar>> m;
  std::map<std::string, Vector<Scalar>> v;
  long step = 0;

  static AdamState zeros_for(const ModelParams<Scalar>& params) {
    AdamState s;
    for (const auto& t : params.tensors()) {
      s.m[t.name] = Vector<Scalar>::Zero(static_cast<Eigen::Index>(t.data.size()));
      s.v[t.name] = Vector<Scalar>::Zero(static_cast<Eigen::Index>(t.data.size()));
    }
    return s;
  }

  bool operator==(const AdamState&) const = default;
};

// One Adam update with coupled L2 (weight_decay * theta added to the
// gradient). Non-finite gradients abort before any tensor is touched.
template <typename Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads, AdamState<Scalar>& state,
               const ParamGroups& groups, double lr, const AdamHyper& hyper = {}) {
  auto ptensors = params.tensors();
  const auto gtensors = grads.tensors();
  if (ptensors.size() != gtensors.size()) throw DimensionError("gradient tensor count does not match parameters");
  for (std::size_t i = 0; i < ptensors.size(); ++i) {
    const auto& g = gtensors[i];
    if (g.name != ptensors[i].name || g.data.size() != ptensors[i].data.size())
      throw DimensionError("gradient for '" + ptensors[i].name + "' has mismatched name or size");
    for (Scalar x : g.data)
      if (!std::isfinite(static_cast<double>(x))) throw NonFiniteError("non-finite gradient in tensor '" + g.name + "'");
    auto mit = state.m.find(g.name);
    if (mit == state.m.end() || mit->second.size() != static_cast<Eigen::Index>(g.data.size()))
      throw DimensionError("optimizer state does not match tensor '" + g.name + "'");
  }

  ++state.step;
  for (std::size_t i = 0; i < ptensors.size(); ++i) {
    auto& p = ptensors[i];
    const auto& g = gtensors[i];
    const double rate = groups.rate(p.name, lr);
    auto& m = state.m.at(p.name);
    auto& v = state.v.at(p.name);
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      const auto e = static_cast<Eigen::Index>(j);
      double mj = static_cast<double>(m(e)), vj = static_cast<double>(v(e));
      p.data[j] = static_cast<Scalar>(
          adam_update(static_cast<double>(p.data[j]), static_cast<double>(g.data[j]), mj, vj, state.step, rate, hyper));
      m(e) = static_cast<Scalar>(mj);
      v(e) = static_cast<Scalar>(vj);
    }
  }
}

}  // namespace igae
