#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "igae/errors.hpp"
#include "igae/model.hpp"
#include "igae/optim.hpp"
#include "igae/tensor_io.hpp"

namespace igae {

// Trailing entry ('~' sorts after every tensor name): class counts, input
// size, stage count, then the stage channel list.
inline const std::string kMetaEntry = "~meta";
inline const std::string kEpochEntry = "train.epochs_done";
inline const std::string kAdamStepEntry = "adam.t";

template <typename Scalar>
void store_params(const ModelParams<Scalar>& params, TensorFile& file) {
  for (const auto& t : params.tensors())
    file[t.name] = {t.dims, std::vector<float>(t.data.begin(), t.data.end())};
  const auto counts = params.class_counts();
  StoredTensor meta;
  meta.values = {static_cast<float>(counts[0]), static_cast<float>(counts[1]), static_cast<float>(counts[2]),
                 static_cast<float>(params.spec.input_size), static_cast<float>(params.spec.stage_channels.size())};
  for (int c : params.spec.stage_channels) meta.values.push_back(static_cast<float>(c));
  meta.dims = {static_cast<std::uint32_t>(meta.values.size())};
  file[kMetaEntry] = std::move(meta);
}

template <typename Scalar>
ModelParams<Scalar> restore_params(const TensorFile& file) {
  auto it = file.find(kMetaEntry);
  if (it == file.end()) throw IoError("checkpoint has no metadata entry");
  const auto& mv = it->second.values;
  if (mv.size() < 5 || mv.size() != 5 + static_cast<std::size_t>(mv[4]))
    throw IoError("checkpoint metadata entry is malformed");
  BackboneSpec spec;
  spec.input_size = static_cast<int>(mv[3]);
  spec.stage_channels.clear();
  for (std::size_t k = 5; k < mv.size(); ++k) spec.stage_channels.push_back(static_cast<int>(mv[k]));
  const std::array<int, 3> counts = {static_cast<int>(mv[0]), static_cast<int>(mv[1]), static_cast<int>(mv[2])};

  ModelParams<Scalar> params = init_params<Scalar>(spec, counts, 0);
  for (auto& t : params.tensors()) {
    auto e = file.find(t.name);
    if (e == file.end()) throw IoError("checkpoint is missing tensor '" + t.name + "'");
    if (e->second.dims != t.dims) throw DimensionError("checkpoint tensor '" + t.name + "' has unexpected shape");
    std::copy(e->second.values.begin(), e->second.values.end(), t.data.begin());
  }
  return params;
}

template <typename Scalar>
void store_adam(const AdamState<Scalar>& state, TensorFile& file) {
  for (const auto& [name, m] : state.m)
    file["adam.m." + name] = {{static_cast<std::uint32_t>(m.size())}, std::vector<float>(m.data(), m.data() + m.size())};
  for (const auto& [name, v] : state.v)
    file["adam.v." + name] = {{static_cast<std::uint32_t>(v.size())}, std::vector<float>(v.data(), v.data() + v.size())};
  file[kAdamStepEntry] = {{}, {static_cast<float>(state.step)}};
}

// Returns nullopt when the file carries no optimizer state.
template <typename Scalar>
std::optional<AdamState<Scalar>> restore_adam(const TensorFile& file, const ModelParams<Scalar>& params) {
  auto st = file.find(kAdamStepEntry);
  if (st == file.end()) return std::nullopt;
  AdamState<Scalar> state;
  state.step = static_cast<long>(st->second.values.at(0));
  for (const auto& t : params.tensors()) {
    for (auto* which : {&state.m, &state.v}) {
      const std::string key = (which == &state.m ? "adam.m." : "adam.v.") + t.name;
      auto e = file.find(key);
      if (e == file.end()) throw IoError("checkpoint is missing optimizer tensor '" + key + "'");
      if (e->second.values.size() != t.data.size())
        throw DimensionError("optimizer tensor '" + key + "' does not mirror its parameter");
      (*which)[t.name] = Eigen::Map<const Eigen::VectorXf>(e->second.values.data(),
                                                          static_cast<Eigen::Index>(e->second.values.size()))
                             .template cast<Scalar>();
    }
  }
  return state;
}

template <typename Scalar>
struct Checkpoint {
  ModelParams<Scalar> params;
  std::optional<AdamState<Scalar>> state;
  int epochs_done = 0;
};

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<Scalar>& params,
                     const AdamState<Scalar>* state = nullptr, int epochs_done = 0) {
  TensorFile file;
  store_params(params, file);
  if (state) store_adam(*state, file);
  file[kEpochEntry] = {{}, {static_cast<float>(epochs_done)}};
  write_tensor_file(path, file);
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  const TensorFile file = read_tensor_file(path);
  Checkpoint<Scalar> ck{restore_params<Scalar>(file), std::nullopt, 0};
  ck.state = restore_adam(file, ck.params);
  if (auto e = file.find(kEpochEntry); e != file.end()) ck.epochs_done = static_cast<int>(e->second.values.at(0));
  return ck;
}

}  // namespace igae
