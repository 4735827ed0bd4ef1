#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "igae/augment.hpp"
#include "igae/model.hpp"
#include "igae/optim.hpp"
#include "igae/sample.hpp"

namespace igae {

// Every hyperparameter of a run. Defaults are the full-scale recipe; desk()
// switches to 40 -> 32 pixel inputs.
struct TrainConfig {
  int epochs = 50;
  int batch_size = 20;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  double base_lr = 8e-4;
  double warmup_start = 8e-6;
  int warmup_epochs = 10;
  int decay_epoch = 30;
  double decayed_lr = 4e-4;
  double weight_decay = 5e-4;
  double backbone_lr_scale = 0.1;
  int resize = 256;
  int input_size = 224;
  double jitter = 0.2;
  std::vector<int> stage_channels{8, 16, 32};
  int checkpoint_every = 10;
  std::filesystem::path output_dir = "runs/igae";
  std::filesystem::path manifest;
  std::filesystem::path image_root;
  std::filesystem::path resume;

  static TrainConfig desk() {
    TrainConfig c;
    c.resize = 40;
    c.input_size = 32;
    return c;
  }

  LrSchedule schedule() const {
    return {base_lr, warmup_start, warmup_epochs, decay_epoch, decayed_lr, epochs};
  }
  AugmentConfig augment() const {
    AugmentConfig a;
    a.resize = resize;
    a.crop = input_size;
    a.jitter = jitter;
    return a;
  }
  BackboneSpec backbone() const { return {input_size, stage_channels}; }
  AdamHyper adam() const {
    AdamHyper h;
    h.weight_decay = weight_decay;
    return h;
  }

  void validate() const;

  // Sets one field from its textual value; key names equal the field names.
  // "profile" = desk | full is accepted as a shorthand for the image sizes.
  void set(std::string_view key, std::string_view value);
};

// Flat "key = value" lines; '#' starts a comment.
void apply_config_text(TrainConfig& cfg, std::string_view text);
void load_config_file(TrainConfig& cfg, const std::filesystem::path& path);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::array<double, 3> head_loss{};
  double lr = 0.0;
  int steps = 0;
  double wall_seconds = 0.0;

  std::string to_json() const;
  // Equality ignoring wall time.
  bool same_result(const EpochLog& o) const {
    return epoch == o.epoch && loss == o.loss && head_loss == o.head_loss && lr == o.lr && steps == o.steps;
  }
};

// Sample order for an epoch; a pure function of (n, seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

// One pass over the shuffled training set: augment, forward, joint loss,
// backward and an Adam step per batch. The last partial batch is kept.
template <typename Scalar>
EpochLog train_epoch(ModelParams<Scalar>& params, AdamState<Scalar>& state, std::span<const Sample> train,
                     const TrainConfig& cfg, int epoch);

template <typename Scalar>
struct FitResult {
  ModelParams<Scalar> params;
  AdamState<Scalar> state;
  std::vector<EpochLog> logs;
};

using EpochObserver = std::function<void(const EpochLog&)>;

// Runs epochs [start, cfg.epochs). Writes output_dir/train_log.jsonl,
// checkpoint_epoch_NNN.igae every checkpoint_every epochs and model.igae at
// the end. With cfg.resume set, continues from that checkpoint.
template <typename Scalar>
FitResult<Scalar> fit(const TrainConfig& cfg, std::span<const Sample> train, const std::array<int, 3>& class_counts,
                      const EpochObserver& observer = {});

inline std::filesystem::path final_checkpoint_path(const std::filesystem::path& dir) { return dir / "model.igae"; }
std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, int epochs_done);

}  // namespace igae
