#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "igae/errors.hpp"
#include "igae/image.hpp"
#include "igae/rng.hpp"

namespace igae {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Head { identity = 0, gender = 1, age = 2 };

inline constexpr std::array<Head, 3> kHeads = {Head::identity, Head::gender, Head::age};

inline std::string_view head_name(Head h) {
  switch (h) {
    case Head::identity: return "identity";
    case Head::gender: return "gender";
    case Head::age: return "age";
  }
  return "?";
}

inline constexpr std::size_t idx(Head h) { return static_cast<std::size_t>(h); }

// Trunk: per stage a 3x3 convolution (stride 1, pad 1), ReLU and 2x2 max
// pool, followed by global average pooling into a feature_dim() vector.
struct BackboneSpec {
  int input_size = 32;
  std::vector<int> stage_channels{8, 16, 32};

  int feature_dim() const { return stage_channels.empty() ? 3 : stage_channels.back(); }
  int spatial_after(int stages) const { return input_size >> stages; }

  void validate() const {
    if (input_size <= 0) throw ConfigError("input_size must be positive");
    const int div = 1 << stage_channels.size();
    if (input_size % div != 0)
      throw ConfigError("input_size " + std::to_string(input_size) + " is not divisible by " + std::to_string(div));
    for (int c : stage_channels)
      if (c <= 0) throw ConfigError("stage channel counts must be positive");
  }

  bool operator==(const BackboneSpec&) const = default;
};

template <typename Scalar>
struct ConvStage {
  Matrix<Scalar> kernel;  // out x (in * 9); column (c * 3 + ky) * 3 + kx
  Vector<Scalar> bias;
};

template <typename Scalar>
struct HeadParams {
  Matrix<Scalar> weight;  // classes x feature_dim
  Vector<Scalar> bias;
};

// Mutable or const view of one named parameter tensor, row-major.
template <typename Scalar>
struct TensorRef {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::span<Scalar> data;
};

template <typename Scalar>
struct ModelParams {
  BackboneSpec spec;
  std::vector<ConvStage<Scalar>> stages;
  std::array<HeadParams<Scalar>, 3> heads;

  std::array<int, 3> class_counts() const {
    return {static_cast<int>(heads[0].weight.rows()), static_cast<int>(heads[1].weight.rows()),
            static_cast<int>(heads[2].weight.rows())};
  }

  HeadParams<Scalar>& head(Head h) { return heads[idx(h)]; }
  const HeadParams<Scalar>& head(Head h) const { return heads[idx(h)]; }

  // Every parameter tensor with its stable name. Names are
  // "backbone.conv<k>.{weight,bias}" and "head.<task>.{weight,bias}".
  std::vector<TensorRef<Scalar>> tensors() { return collect<Scalar>(*this); }
  std::vector<TensorRef<const Scalar>> tensors() const { return collect<const Scalar>(*this); }

  ModelParams zeros_like() const {
    ModelParams z = *this;
    for (auto& t : z.tensors()) std::fill(t.data.begin(), t.data.end(), Scalar(0));
    return z;
  }

  template <typename To>
  ModelParams<To> cast() const {
    ModelParams<To> out;
    out.spec = spec;
    for (const auto& s : stages) out.stages.push_back({s.kernel.template cast<To>(), s.bias.template cast<To>()});
    for (std::size_t t = 0; t < 3; ++t)
      out.heads[t] = {heads[t].weight.template cast<To>(), heads[t].bias.template cast<To>()};
    return out;
  }

  bool operator==(const ModelParams& o) const {
    if (!(spec == o.spec) || stages.size() != o.stages.size()) return false;
    for (std::size_t k = 0; k < stages.size(); ++k)
      if (stages[k].kernel != o.stages[k].kernel || stages[k].bias != o.stages[k].bias) return false;
    for (std::size_t t = 0; t < 3; ++t)
      if (heads[t].weight != o.heads[t].weight || heads[t].bias != o.heads[t].bias) return false;
    return true;
  }

 private:
  template <typename S, typename Self>
  static std::vector<TensorRef<S>> collect(Self& self) {
    std::vector<TensorRef<S>> out;
    auto add = [&](std::string name, std::vector<std::uint32_t> dims, auto& m) {
      out.push_back({std::move(name), std::move(dims), std::span<S>(m.data(), static_cast<std::size_t>(m.size()))});
    };
    int in = 3;
    for (std::size_t k = 0; k < self.stages.size(); ++k) {
      auto& s = self.stages[k];
      const auto out_ch = static_cast<std::uint32_t>(s.kernel.rows());
      const std::string base = "backbone.conv" + std::to_string(k);
      add(base + ".weight", {out_ch, static_cast<std::uint32_t>(in), 3, 3}, s.kernel);
      add(base + ".bias", {out_ch}, s.bias);
      in = static_cast<int>(out_ch);
    }
    for (auto h : kHeads) {
      auto& hp = self.heads[idx(h)];
      const std::string base = "head." + std::string(head_name(h));
      add(base + ".weight", {static_cast<std::uint32_t>(hp.weight.rows()), static_cast<std::uint32_t>(hp.weight.cols())},
          hp.weight);
      add(base + ".bias", {static_cast<std::uint32_t>(hp.bias.size())}, hp.bias);
    }
    return out;
  }
};

inline void validate_class_counts(const std::array<int, 3>& counts) {
  if (counts[0] < 2) throw ConfigError("identity head needs at least 2 classes");
  if (counts[1] != 2) throw ConfigError("gender head must have 2 classes");
  if (counts[2] < 2) throw ConfigError("age head needs at least 2 classes");
}

// Weights uniform in [-a, a] with a = sqrt(6 / fan_in); biases zero.
template <typename Scalar>
ModelParams<Scalar> init_params(const BackboneSpec& spec, const std::array<int, 3>& class_counts, std::uint64_t seed) {
  spec.validate();
  validate_class_counts(class_counts);
  Rng rng(mix_seed({seed, 0x1417}));
  auto fill = [&](auto& m, int fan_in) {
    const double a = std::sqrt(6.0 / fan_in);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(uniform(rng, -a, a));
  };

  ModelParams<Scalar> p;
  p.spec = spec;
  int in = 3;
  for (int out : spec.stage_channels) {
    ConvStage<Scalar> s{Matrix<Scalar>(out, in * 9), Vector<Scalar>::Zero(out)};
    fill(s.kernel, in * 9);
    p.stages.push_back(std::move(s));
    in = out;
  }
  for (auto h : kHeads) {
    auto& hp = p.heads[idx(h)];
    hp.weight.resize(class_counts[idx(h)], spec.feature_dim());
    fill(hp.weight, spec.feature_dim());
    hp.bias = Vector<Scalar>::Zero(class_counts[idx(h)]);
  }
  return p;
}

// Numerically stable softmax of one logit row.
inline Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Scalar>
struct ForwardResult {
  Matrix<Scalar> features;               // N x D, trunk feature f per row
  std::array<Matrix<Scalar>, 3> logits;  // per head, N x C_t

  const Matrix<Scalar>& head_logits(Head h) const { return logits[idx(h)]; }
};

// Intermediates kept by forward() for backward(). Feature maps of a batch
// are stored channel-major: row = channel, column = n * H * W + y * W + x.
template <typename Scalar>
struct ForwardCache {
  struct Stage {
    int height = 0;  // input side of this stage
    Matrix<Scalar> columns;       // (in * 9) x (N * H * W)
    Matrix<Scalar> activated;     // out x (N * H * W), post-ReLU
    std::vector<Eigen::Index> argmax;  // per pooled output element, index into activated
  };
  int batch = 0;
  std::vector<Stage> stages;
  Matrix<Scalar> features;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& maps, int channels, int side, int batch) {
  const Eigen::Index hw = Eigen::Index{side} * side;
  Matrix<Scalar> col = Matrix<Scalar>::Zero(Eigen::Index{channels} * 9, hw * batch);
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = (Eigen::Index{c} * 3 + ky) * 3 + kx;
        for (int n = 0; n < batch; ++n)
          for (int y = 0; y < side; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= side) continue;
            for (int x = 0; x < side; ++x) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= side) continue;
              col(row, n * hw + Eigen::Index{y} * side + x) = maps(c, n * hw + Eigen::Index{sy} * side + sx);
            }
          }
      }
  return col;
}

template <typename Scalar>
Matrix<Scalar> col2im(const Matrix<Scalar>& col, int channels, int side, int batch) {
  const Eigen::Index hw = Eigen::Index{side} * side;
  Matrix<Scalar> maps = Matrix<Scalar>::Zero(channels, hw * batch);
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = (Eigen::Index{c} * 3 + ky) * 3 + kx;
        for (int n = 0; n < batch; ++n)
          for (int y = 0; y < side; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= side) continue;
            for (int x = 0; x < side; ++x) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= side) continue;
              maps(c, n * hw + Eigen::Index{sy} * side + sx) += col(row, n * hw + Eigen::Index{y} * side + x);
            }
          }
      }
  return maps;
}

// 2x2 stride-2 max pool. The first maximum in (0,0),(0,1),(1,0),(1,1)
// order wins ties.
template <typename Scalar>
Matrix<Scalar> max_pool(const Matrix<Scalar>& maps, int side, int batch, std::vector<Eigen::Index>& argmax) {
  const int half = side / 2;
  const Eigen::Index hw = Eigen::Index{side} * side, hw2 = Eigen::Index{half} * half;
  Matrix<Scalar> out(maps.rows(), hw2 * batch);
  argmax.assign(static_cast<std::size_t>(out.size()), 0);
  for (Eigen::Index c = 0; c < maps.rows(); ++c)
    for (int n = 0; n < batch; ++n)
      for (int y = 0; y < half; ++y)
        for (int x = 0; x < half; ++x) {
          Eigen::Index best = n * hw + Eigen::Index{2 * y} * side + 2 * x;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index i = n * hw + Eigen::Index{2 * y + dy} * side + 2 * x + dx;
              if (maps(c, i) > maps(c, best)) best = i;
            }
          const Eigen::Index o = n * hw2 + Eigen::Index{y} * half + x;
          out(c, o) = maps(c, best);
          argmax[static_cast<std::size_t>(c * out.cols() + o)] = best;
        }
  return out;
}

template <typename Scalar>
Matrix<Scalar> stack_batch(std::span<const Image> batch, int side) {
  const Eigen::Index hw = Eigen::Index{side} * side;
  Matrix<Scalar> maps(3, hw * static_cast<Eigen::Index>(batch.size()));
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& img = batch[n];
    if (img.height != side || img.width != side)
      throw DimensionError("expected " + std::to_string(side) + "x" + std::to_string(side) + " input, got " +
                           std::to_string(img.height) + "x" + std::to_string(img.width) + " at batch index " +
                           std::to_string(n));
    maps.middleCols(static_cast<Eigen::Index>(n) * hw, hw) = img.pixels.template cast<Scalar>();
  }
  return maps;
}

}  // namespace detail

// Runs the trunk and the three heads. The heads read the same feature
// matrix and never see each other's parameters.
template <typename Scalar>
ForwardResult<Scalar> forward(const ModelParams<Scalar>& params, std::span<const Image> batch,
                              ForwardCache<Scalar>* cache = nullptr) {
  const auto& spec = params.spec;
  if (batch.empty()) throw DimensionError("empty batch");
  const int n = static_cast<int>(batch.size());
  int side = spec.input_size;
  int channels = 3;
  Matrix<Scalar> maps = detail::stack_batch<Scalar>(batch, side);
  if (cache) {
    cache->batch = n;
    cache->stages.assign(params.stages.size(), {});
  }

  for (std::size_t k = 0; k < params.stages.size(); ++k) {
    const auto& st = params.stages[k];
    if (st.kernel.cols() != Eigen::Index{channels} * 9)
      throw DimensionError("stage " + std::to_string(k) + " kernel expects " + std::to_string(st.kernel.cols() / 9) +
                           " input channels, got " + std::to_string(channels));
    Matrix<Scalar> col = detail::im2col(maps, channels, side, n);
    Matrix<Scalar> act = st.kernel * col;
    act.colwise() += st.bias;
    act = act.cwiseMax(Scalar(0));
    std::vector<Eigen::Index> argmax;
    maps = detail::max_pool(act, side, n, argmax);
    if (cache) {
      auto& cs = cache->stages[k];
      cs.height = side;
      cs.columns = std::move(col);
      cs.activated = std::move(act);
      cs.argmax = std::move(argmax);
    }
    channels = static_cast<int>(st.kernel.rows());
    side /= 2;
  }

  // Global average pool, accumulated in double.
  const Eigen::Index hw = Eigen::Index{side} * side;
  ForwardResult<Scalar> out;
  out.features.resize(n, channels);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < channels; ++c)
      out.features(i, c) = static_cast<Scalar>(maps.row(c).segment(i * hw, hw).template cast<double>().mean());

  for (auto h : kHeads) {
    const auto& hp = params.head(h);
    if (hp.weight.cols() != out.features.cols())
      throw DimensionError(std::string(head_name(h)) + " head expects " + std::to_string(hp.weight.cols()) +
                           " features, got " + std::to_string(out.features.cols()));
    Matrix<Scalar> z = out.features * hp.weight.transpose();
    z.rowwise() += hp.bias.transpose();
    out.logits[idx(h)] = std::move(z);
  }
  if (cache) cache->features = out.features;
  return out;
}

// Trunk feature and pre-softmax logits of every head, for matching.
template <typename Scalar>
ForwardResult<Scalar> extract_features(const ModelParams<Scalar>& params, std::span<const Image> batch) {
  return forward(params, batch);
}

// Reverse pass: given dL/dlogits per head, returns dL/dparams with the same
// layout as params.
template <typename Scalar>
ModelParams<Scalar> backward(const ModelParams<Scalar>& params, const ForwardCache<Scalar>& cache,
                             const std::array<Matrix<Scalar>, 3>& dlogits) {
  ModelParams<Scalar> grads = params.zeros_like();
  const int n = cache.batch;
  const auto& features = cache.features;

  Matrix<Scalar> dfeat = Matrix<Scalar>::Zero(n, features.cols());
  for (auto h : kHeads) {
    const auto& dz = dlogits[idx(h)];
    if (dz.rows() != n || dz.cols() != params.head(h).weight.rows())
      throw DimensionError(std::string(head_name(h)) + " gradient has wrong shape");
    grads.head(h).weight.noalias() = dz.transpose() * features;
    grads.head(h).bias = dz.colwise().sum().transpose();
    dfeat.noalias() += dz * params.head(h).weight;
  }
  if (params.stages.empty()) return grads;

  int side = params.spec.spatial_after(static_cast<int>(params.stages.size()));
  const Eigen::Index hw = Eigen::Index{side} * side;
  Matrix<Scalar> dmaps(features.cols(), hw * n);
  for (int i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      dmaps.row(c).segment(i * hw, hw).setConstant(dfeat(i, c) / static_cast<Scalar>(hw));

  for (std::size_t k = params.stages.size(); k-- > 0;) {
    const auto& cs = cache.stages[k];
    const auto& st = params.stages[k];
    Matrix<Scalar> dact = Matrix<Scalar>::Zero(cs.activated.rows(), cs.activated.cols());
    for (Eigen::Index c = 0; c < dmaps.rows(); ++c)
      for (Eigen::Index o = 0; o < dmaps.cols(); ++o)
        dact(c, cs.argmax[static_cast<std::size_t>(c * dmaps.cols() + o)]) += dmaps(c, o);
    dact = (cs.activated.array() > Scalar(0)).select(dact, Scalar(0));

    grads.stages[k].kernel.noalias() = dact * cs.columns.transpose();
    grads.stages[k].bias = dact.rowwise().sum();
    if (k > 0) {
      Matrix<Scalar> dcol = st.kernel.transpose() * dact;
      dmaps = detail::col2im(dcol, static_cast<int>(st.kernel.cols() / 9), cs.height, n);
    }
    side = cs.height;
  }
  return grads;
}

}  // namespace igae
