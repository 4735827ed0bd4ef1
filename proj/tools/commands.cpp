#include "commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "igae/checkpoint.hpp"
#include "igae/dataman.hpp"
#include "igae/errors.hpp"
#include "igae/eval.hpp"
#include "igae/sample.hpp"
#include "igae/synth.hpp"
#include "igae/train.hpp"

namespace fs = std::filesystem;

namespace igae::cli {
namespace {

using Scalar = float;

fs::path root_or_parent(const fs::path& root, const fs::path& manifest) {
  if (!root.empty()) return root;
  return manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
}

struct SynthArgs {
  fs::path out;
  int subjects = 6;
  int images = 10;
  int size = 32;
  std::uint64_t seed = 0;
  bool statistics = false;
};

int do_synth(const SynthArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  if (a.statistics) {
    const auto records = synth_statistics_manifest(a.seed);
    write_manifest(a.out / "manifest.csv", records);
    std::cout << "wrote " << records.size() << " records to " << (a.out / "manifest.csv").string() << '\n';
    return 0;
  }
  const auto data = synth_dataset(a.subjects, a.images, a.size, a.seed);
  write_synth_dataset(a.out, data);
  std::cout << "wrote " << data.records.size() << " images of " << a.subjects << " subjects to " << a.out.string()
            << '\n';
  return 0;
}

struct PrepareArgs {
  fs::path manifest;
  std::string aspect;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  fs::path out;
};

int do_prepare(const PrepareArgs& a) {
  const auto aspect = parse_aspect(a.aspect);
  if (!aspect) throw ConfigError("unknown aspect '" + a.aspect + "'");
  const auto records = load_manifest(a.manifest);
  const auto kept = filter_accessories(records);
  const auto subset = partition_by_aspect(kept).at(*aspect);
  if (subset.empty()) throw ConfigError("no records for aspect " + std::string(to_string(*aspect)));
  const auto split = stratified_split(subset, {a.seed, a.train_fraction});
  const auto maps = LabelMaps::build(subset);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  write_manifest(a.out / "train.csv", split.train);
  write_manifest(a.out / "test.csv", split.test);
  maps.save(a.out / "label_map.json");

  const auto g = gender_support(subset);
  const auto ages = age_support(subset, maps.scheme());
  std::cout << "aspect " << to_string(*aspect) << ": " << records.size() - kept.size()
            << " accessory images excluded\n"
            << "images: " << subset.size() << " (train " << split.train.size() << ", test " << split.test.size()
            << ")\n"
            << "identities: " << maps.identity_count() << '\n'
            << "gender support: male " << g[0] << ", female " << g[1] << '\n'
            << "age-group support:";
  const auto labels = maps.age_names();
  for (std::size_t k = 0; k < ages.size(); ++k) std::cout << ' ' << labels[k] << '=' << ages[k];
  std::cout << '\n';
  return 0;
}

struct TrainArgs {
  fs::path config;
  fs::path label_map;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
};

int do_train(const TrainArgs& a) {
  auto cfg = TrainConfig::desk();
  if (!a.config.empty()) load_config_file(cfg, a.config);
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : a.overrides) cfg.set(k, v);
  if (cfg.manifest.empty()) throw ConfigError("no training manifest given (config key 'manifest' or --manifest)");
  cfg.validate();

  const auto records = load_manifest(cfg.manifest);
  const auto maps = a.label_map.empty() ? LabelMaps::build(records) : LabelMaps::load(a.label_map);
  const auto samples = load_samples(records, root_or_parent(cfg.image_root, cfg.manifest), maps);

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output_dir " + cfg.output_dir.string() + ": " + ec.message());
  maps.save(cfg.output_dir / "label_map.json");

  const auto result = fit<Scalar>(cfg, samples, maps.class_counts(), [](const EpochLog& log) {
    std::cout << log.to_json() << '\n';
  });
  std::cout << "checkpoint: " << final_checkpoint_path(cfg.output_dir).string() << '\n';
  return 0;
}

struct EvalArgs {
  fs::path checkpoint;
  fs::path test_manifest;
  fs::path out;
  fs::path image_root;
  fs::path label_map;
};

LabelMaps label_map_for(const fs::path& explicit_path, const fs::path& checkpoint) {
  const auto p = explicit_path.empty() ? checkpoint.parent_path() / "label_map.json" : explicit_path;
  return LabelMaps::load(p);
}

AugmentConfig eval_augment(const BackboneSpec& spec) {
  AugmentConfig aug;
  aug.crop = spec.input_size;
  aug.resize = spec.input_size;
  return aug;
}

int do_eval(const EvalArgs& a) {
  const auto ck = load_checkpoint<Scalar>(a.checkpoint);
  const auto maps = label_map_for(a.label_map, a.checkpoint);
  const auto records = load_manifest(a.test_manifest);
  const auto samples = load_samples(records, root_or_parent(a.image_root, a.test_manifest), maps);
  const auto report = evaluate(ck.params, samples, maps, eval_augment(ck.params.spec));
  emit_report(report, a.out);
  std::cout << format_summary(report);
  return 0;
}

struct MatchArgs {
  fs::path checkpoint;
  fs::path gallery;
  fs::path query;
  std::string source = "trunk";
  fs::path image_root;
  fs::path out;
  int top_k = 5;
};

std::vector<FeatureEntry> entries_for(const ModelParams<Scalar>& params, const fs::path& manifest,
                                      const fs::path& image_root, FeatureSource source) {
  const auto records = load_manifest(manifest);
  // Matching does not need label indices; a map over these subjects suffices.
  const auto maps = LabelMaps::build(records);
  const auto samples = load_samples(records, root_or_parent(image_root, manifest), maps);
  std::vector<std::string> subjects;
  for (const auto& r : records) subjects.push_back(r.subject_id);
  return extract_entries(params, samples, subjects, eval_augment(params.spec), source);
}

int do_match(const MatchArgs& a) {
  FeatureSource source;
  if (a.source == "trunk" || a.source == "trunk_feature") source = FeatureSource::trunk_feature;
  else if (a.source == "identity" || a.source == "identity_logits") source = FeatureSource::identity_logits;
  else throw ConfigError("--source must be 'trunk' or 'identity'");

  const auto ck = load_checkpoint<Scalar>(a.checkpoint);
  const auto gallery = entries_for(ck.params, a.gallery, a.image_root, source);
  const auto queries = entries_for(ck.params, a.query, a.image_root, source);
  const auto result = open_set_match(gallery, queries);

  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw IoError("cannot write " + a.out.string());
    os << "query,subject,rank,gallery_subject,similarity\n";
    os.precision(17);
    for (std::size_t q = 0; q < result.rankings.size(); ++q) {
      const auto& r = result.rankings[q];
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(a.top_k), r.size());
      for (std::size_t i = 0; i < k; ++i)
        os << q << ',' << queries[q].subject << ',' << i + 1 << ',' << r[i].subject << ',' << r[i].similarity << '\n';
    }
  }
  std::printf("queries: %zu, gallery: %zu, rank-1: %.2f%%\n", queries.size(), gallery.size(), 100.0 * result.rank1);
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Joint identity, gender and age-group estimation from hand images"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset and manifest");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--subjects", synth.subjects, "Number of subjects")->capture_default_str();
  s->add_option("--images", synth.images, "Images per subject")->capture_default_str();
  s->add_option("--size", synth.size, "Image side in pixels")->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  s->add_flag("--statistics", synth.statistics,
              "Write a pixel-free manifest mirroring the 11k hands per-aspect statistics instead");

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare", "Filter, partition by aspect and split a manifest");
  p->add_option("--manifest", prep.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  p->add_option("--aspect", prep.aspect, "dorsal_right | dorsal_left | palmar_right | palmar_left")->required();
  p->add_option("--seed", prep.seed, "Split seed")->capture_default_str();
  p->add_option("--train-fraction", prep.train_fraction, "Per-subject train fraction")->capture_default_str();
  p->add_option("--out", prep.out, "Output directory")->required();

  TrainArgs tr;
  std::string epochs, batch_size, seed, manifest, image_root, output_dir, profile, resume;
  auto* t = app.add_subcommand("train", "Train a model from a config file (flags override it)");
  t->add_option("--config", tr.config, "key = value config file")->check(CLI::ExistingFile);
  t->add_option("--epochs", epochs, "Number of epochs");
  t->add_option("--batch-size", batch_size, "Mini-batch size");
  t->add_option("--seed", seed, "Random seed");
  t->add_option("--manifest", manifest, "Training manifest");
  t->add_option("--image-root", image_root, "Directory image paths are relative to");
  t->add_option("--output-dir", output_dir, "Directory for logs and checkpoints");
  t->add_option("--profile", profile, "desk (40->32 px, default) or full (256->224 px)");
  t->add_option("--resume", resume, "Checkpoint to continue from");
  t->add_option("--label-map", tr.label_map, "Label map JSON (default: built from the manifest)");
  t->add_option("--set", tr.sets, "Override any config key: --set key=value");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a test manifest");
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  e->add_option("--test-manifest", ev.test_manifest, "Test manifest")->required();
  e->add_option("--out", ev.out, "Report directory")->required();
  e->add_option("--image-root", ev.image_root, "Directory image paths are relative to");
  e->add_option("--label-map", ev.label_map, "Label map JSON (default: next to the checkpoint)");

  MatchArgs ma;
  auto* m = app.add_subcommand("match", "Rank gallery images for each query by cosine similarity");
  m->add_option("--checkpoint", ma.checkpoint, "Model checkpoint")->required();
  m->add_option("--gallery", ma.gallery, "Gallery manifest")->required();
  m->add_option("--query", ma.query, "Query manifest")->required();
  m->add_option("--source", ma.source, "trunk (default) or identity")->capture_default_str();
  m->add_option("--image-root", ma.image_root, "Directory image paths are relative to");
  m->add_option("--out", ma.out, "Write top-k rankings as CSV");
  m->add_option("--top-k", ma.top_k, "Rankings kept per query in --out")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*s) return do_synth(synth);
    if (*p) return do_prepare(prep);
    if (*t) {
      auto put = [&](const char* key, const std::string& v) {
        if (!v.empty()) tr.overrides[key] = v;
      };
      put("epochs", epochs);
      put("batch_size", batch_size);
      put("seed", seed);
      put("manifest", manifest);
      put("image_root", image_root);
      put("output_dir", output_dir);
      put("profile", profile);
      put("resume", resume);
      return do_train(tr);
    }
    if (*e) return do_eval(ev);
    if (*m) return do_match(ma);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace igae::cli
