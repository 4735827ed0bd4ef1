#include "igae/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "igae/checkpoint.hpp"
#include "igae/errors.hpp"
#include "igae/loss.hpp"
#include "json.hpp"

namespace igae {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  std::istringstream is{std::string(value)};
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof())
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto pos = value.find(',', start);
    if (pos == std::string_view::npos) pos = value.size();
    const auto item = trim(value.substr(start, pos - start));
    if (!item.empty()) out.push_back(parse_number<int>(key, item));
    start = pos + 1;
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (!(backbone_lr_scale > 0.0)) throw ConfigError("backbone_lr_scale must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  LossConfig{epsilon}.validate();
  schedule().validate();
  augment().validate();
  backbone().validate();
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "epochs") epochs = parse_number<int>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "epsilon") epsilon = parse_number<double>(key, value);
  else if (key == "base_lr") base_lr = parse_number<double>(key, value);
  else if (key == "warmup_start") warmup_start = parse_number<double>(key, value);
  else if (key == "warmup_epochs") warmup_epochs = parse_number<int>(key, value);
  else if (key == "decay_epoch") decay_epoch = parse_number<int>(key, value);
  else if (key == "decayed_lr") decayed_lr = parse_number<double>(key, value);
  else if (key == "weight_decay") weight_decay = parse_number<double>(key, value);
  else if (key == "backbone_lr_scale") backbone_lr_scale = parse_number<double>(key, value);
  else if (key == "resize") resize = parse_number<int>(key, value);
  else if (key == "input_size") input_size = parse_number<int>(key, value);
  else if (key == "jitter") jitter = parse_number<double>(key, value);
  else if (key == "stage_channels") stage_channels = parse_int_list(key, value);
  else if (key == "checkpoint_every") checkpoint_every = parse_number<int>(key, value);
  else if (key == "output_dir") output_dir = std::string(value);
  else if (key == "manifest") manifest = std::string(value);
  else if (key == "image_root") image_root = std::string(value);
  else if (key == "resume") resume = std::string(value);
  else if (key == "profile") {
    if (value == "desk") resize = 40, input_size = 32;
    else if (value == "full") resize = 256, input_size = 224;
    else throw ConfigError("profile must be 'desk' or 'full'");
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_text(TrainConfig& cfg, std::string_view text) {
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    start = pos + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void load_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(cfg, ss.str());
}

std::string EpochLog::to_json() const {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["loss"] = loss;
  j["loss_identity"] = head_loss[0];
  j["loss_gender"] = head_loss[1];
  j["loss_age"] = head_loss[2];
  j["lr"] = lr;
  j["steps"] = steps;
  j["wall_time"] = wall_seconds;
  return j.dump();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  Rng rng(mix_seed({seed, static_cast<std::uint64_t>(epoch), 0x5a}));
  return permutation(n, rng);
}

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, int epochs_done) {
  char name[48];
  std::snprintf(name, sizeof name, "checkpoint_epoch_%03d.igae", epochs_done);
  return dir / name;
}

template <typename Scalar>
EpochLog train_epoch(ModelParams<Scalar>& params, AdamState<Scalar>& state, std::span<const Sample> train,
                     const TrainConfig& cfg, int epoch) {
  if (train.empty()) throw ConfigError("training set is empty");
  const auto t0 = std::chrono::steady_clock::now();
  const auto counts = params.class_counts();
  const auto aug = cfg.augment();
  const auto groups = make_param_groups(params, cfg.backbone_lr_scale);
  const auto hyper = cfg.adam();
  const double lr = lr_at(epoch, cfg.schedule());
  const auto order = epoch_order(train.size(), cfg.seed, epoch);
  Rng rng(mix_seed({cfg.seed, static_cast<std::uint64_t>(epoch), 0xa06}));

  EpochLog log;
  log.epoch = epoch;
  log.lr = lr;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    std::vector<Image> images;
    HeadLabels labels;
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = train[order[i]];
      const std::array<int, 3> l = {s.labels.identity, s.labels.gender, s.labels.age};
      for (std::size_t t = 0; t < 3; ++t) {
        if (l[t] < 0 || l[t] >= counts[t])
          throw LabelError("sample '" + s.name + "' has " + std::string(head_name(kHeads[t])) + " label " +
                           std::to_string(l[t]) + " outside the head's " + std::to_string(counts[t]) + " classes");
        labels[t].push_back(l[t]);
      }
      images.push_back(augment_train(s.pixels, aug, rng));
    }

    ForwardCache<Scalar> cache;
    const auto out = forward<Scalar>(params, images, &cache);
    const auto lg = total_loss<Scalar>(out.logits, labels, cfg.epsilon);
    if (!std::isfinite(lg.loss.total))
      throw NonFiniteError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(start / bs) + " (first sample '" + train[order[start]].name + "')");
    const auto grads = backward(params, cache, lg.grad);
    adam_step(params, grads, state, groups, lr, hyper);

    log.loss += lg.loss.total;
    for (std::size_t t = 0; t < 3; ++t) log.head_loss[t] += lg.loss.per_head[t];
    ++log.steps;
  }
  log.loss /= log.steps;
  for (auto& h : log.head_loss) h /= log.steps;
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

template <typename Scalar>
FitResult<Scalar> fit(const TrainConfig& cfg, std::span<const Sample> train, const std::array<int, 3>& class_counts,
                      const EpochObserver& observer) {
  cfg.validate();
  if (train.empty()) throw ConfigError("training set is empty");

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output_dir " + cfg.output_dir.string() + ": " + ec.message());
  const auto log_path = cfg.output_dir / "train_log.jsonl";
  const bool resuming = !cfg.resume.empty();
  std::ofstream log_file(log_path, resuming ? std::ios::app : std::ios::trunc);
  if (!log_file) throw IoError("cannot write " + log_path.string());

  FitResult<Scalar> result;
  int start = 0;
  if (resuming) {
    auto ck = load_checkpoint<Scalar>(cfg.resume);
    if (ck.params.class_counts() != class_counts) throw ConfigError("resume checkpoint has different class counts");
    if (!(ck.params.spec == cfg.backbone())) throw ConfigError("resume checkpoint has a different backbone");
    result.params = std::move(ck.params);
    result.state = ck.state ? std::move(*ck.state) : AdamState<Scalar>::zeros_for(result.params);
    start = ck.epochs_done;
  } else {
    result.params = init_params<Scalar>(cfg.backbone(), class_counts, cfg.seed);
    result.state = AdamState<Scalar>::zeros_for(result.params);
  }

  for (int epoch = start; epoch < cfg.epochs; ++epoch) {
    auto log = train_epoch(result.params, result.state, train, cfg, epoch);
    log_file << log.to_json() << '\n';
    log_file.flush();
    if (observer) observer(log);
    result.logs.push_back(log);
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
      save_checkpoint(epoch_checkpoint_path(cfg.output_dir, epoch + 1), result.params, &result.state, epoch + 1);
  }
  save_checkpoint(final_checkpoint_path(cfg.output_dir), result.params, &result.state, cfg.epochs);
  if (!log_file) throw IoError("write failed for " + log_path.string());
  return result;
}

template EpochLog train_epoch<float>(ModelParams<float>&, AdamState<float>&, std::span<const Sample>,
                                     const TrainConfig&, int);
template EpochLog train_epoch<double>(ModelParams<double>&, AdamState<double>&, std::span<const Sample>,
                                      const TrainConfig&, int);
template FitResult<float> fit<float>(const TrainConfig&, std::span<const Sample>, const std::array<int, 3>&,
                                     const EpochObserver&);
template FitResult<double> fit<double>(const TrainConfig&, std::span<const Sample>, const std::array<int, 3>&,
                                       const EpochObserver&);

}  // namespace igae
