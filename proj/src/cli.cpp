// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "woad/checkpoint.hpp"
#include "woad/config.hpp"
#include "woad/detection_io.hpp"
#include "woad/features_io.hpp"
#include "woad/gradient_suite.hpp"
#include "woad/manifest.hpp"
#include "woad/pipeline.hpp"
#include "woad/synthetic.hpp"
#include "woad/training.hpp"

namespace woad {

namespace {

namespace fs = std::filesystem;

enum class Verbosity { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// WOAD_LOG_LEVEL = error | warn | info | debug; default info.
Verbosity verbosity_from_env() {
  const char* v = std::getenv("WOAD_LOG_LEVEL");
  if (v == nullptr) return Verbosity::Info;
  const std::string s(v);
  if (s == "error") return Verbosity::Error;
  if (s == "warn") return Verbosity::Warn;
  if (s == "debug") return Verbosity::Debug;
  return Verbosity::Info;
}

class Logger {
 public:
  Logger(std::ostream& err, Verbosity level) : err_(err), level_(level) {}
  void log(Verbosity v, const std::string& msg) const {
    static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
    if (v <= level_) err_ << kNames[static_cast<int>(v)] << ": " << msg << '\n';
  }

 private:
  std::ostream& err_;
  Verbosity level_;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Flat key=value configuration file");
    cmd->add_option("--set", overrides, "Override one key, key=value (repeatable)");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
  }
};

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw UsageError("split must be train or test, found '" + s + "'");
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, std::ostream& out, const Logger& log) {
  const SyntheticCorpus corpus = generate_synthetic(cfg.synth);
  for (const auto& w : corpus.warnings) log.log(Verbosity::Warn, w);
  const fs::path manifest = write_synthetic(corpus, out_dir);
  out << "manifest=" << manifest.string() << '\n';
  out << "videos=" << corpus.manifest.entries.size() << '\n';
  out << "corpus_hash=" << hex(synthetic_hash(corpus)) << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& manifest_path, const std::string& out_dir,
              bool keep_epochs, std::ostream& out, const Logger& log) {
  const CorpusManifest manifest = load_manifest(manifest_path);
  check_feature_files(manifest, manifest_path);
  const Corpus corpus = load_corpus(manifest, Split::Train);
  if (corpus.videos.empty()) throw std::invalid_argument("manifest has no training videos");
  fs::create_directories(out_dir);
  const std::uint64_t chash = config_hash(cfg);
  {
    std::ofstream cfg_out(fs::path(out_dir) / "config.txt");
    cfg_out << serialize_config(cfg);
  }

  std::ofstream metrics(fs::path(out_dir) / "metrics.tsv");
  metrics << "iteration\tL_OAR\tL_MIL\tL_CAS\tL_total\n";
  std::size_t written = 0;
  std::vector<std::string> ids;
  for (const Video& v : corpus.videos) ids.push_back(v.id);

  auto on_epoch = [&](const EpochSnapshot& snap) {
    log.log(Verbosity::Info, "epoch " + std::to_string(snap.epoch) + " done");
    if (keep_epochs) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", snap.epoch);
      write_checkpoint(fs::path(out_dir) / name, Checkpoint{*snap.model, chash, snap.epoch, snap.rng_state});
    }
  };

  TrainResult result;
  try {
    result = train(corpus, cfg.train, on_epoch);
  } catch (const TrainingDiverged& e) {
    log.log(Verbosity::Error, "training diverged at iteration " + std::to_string(e.iteration) +
                                  ", last good epoch " + std::to_string(e.last_good_epoch));
    throw;
  }
  for (; written < result.log.size(); ++written) metrics << format_metrics(result.log[written]) << '\n';

  const Checkpoint ckpt{result.model, chash, cfg.train.epochs - 1, {}};
  const fs::path ckpt_path = fs::path(out_dir) / "model.ckpt";
  write_checkpoint(ckpt_path, ckpt);
  std::ofstream labels(fs::path(out_dir) / "labels.tsv");
  write_label_snapshot(labels, ids, result.tracks);

  out << "checkpoint=" << ckpt_path.string() << '\n';
  out << "iterations=" << result.log.size() << '\n';
  if (!result.log.empty()) out << "final_loss=" << result.log.back().loss.total << '\n';
  out << "checkpoint_hash=" << hex(checkpoint_hash(ckpt)) << '\n';
  return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& ckpt_path, const std::string& manifest_path,
              const std::string& split, const std::string& features_path, const std::string& video_id,
              double fps, const std::string& out_dir, std::ostream& out) {
  const Checkpoint ckpt = read_checkpoint(fs::path(ckpt_path));
  Corpus corpus;
  corpus.classes = ckpt.model.shape.classes;
  if (!features_path.empty()) {
    FeatureSequence seq = load_features(features_path, video_id.empty() ? fs::path(features_path).stem().string() : video_id, fps);
    Video v;
    v.id = seq.video_id;
    v.raw = std::move(seq.features);
    v.fps = fps;
    corpus.videos.push_back(std::move(v));
  } else if (!manifest_path.empty()) {
    const CorpusManifest manifest = load_manifest(manifest_path);
    if (manifest.classes() != ckpt.model.shape.classes) {
      throw std::invalid_argument("checkpoint has " + std::to_string(ckpt.model.shape.classes) +
                                  " classes, manifest has " + std::to_string(manifest.classes()));
    }
    corpus = load_corpus(manifest, parse_split(split));
  } else {
    throw UsageError("infer needs --features or --manifest");
  }

  fs::create_directories(out_dir);
  std::size_t events = 0;
  for (const DetectionLog& log : infer_corpus(ckpt.model, corpus, cfg.stream_options())) {
    write_detection_log(fs::path(out_dir) / (log.video_id + ".det"), log);
    events += log.events.size();
  }
  out << "videos=" << corpus.videos.size() << '\n' << "events=" << events << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& manifest_path, const std::string& split,
             const std::string& det_dir, std::ostream& out) {
  const CorpusManifest manifest = load_manifest(manifest_path);
  const auto truth = ground_truth(manifest, parse_split(split));
  std::vector<DetectionLog> logs;
  for (const auto& gt : truth) {
    DetectionLog log = read_detection_log(fs::path(det_dir) / (gt.video_id + ".det"));
    if (log.video_id != gt.video_id) {
      throw std::invalid_argument("detection log for '" + gt.video_id + "' names '" + log.video_id + "'");
    }
    if (log.length() != gt.num_frames) {
      throw std::invalid_argument("detection log for '" + gt.video_id + "' has " + std::to_string(log.length()) +
                                  " frames, expected " + std::to_string(gt.num_frames));
    }
    logs.push_back(std::move(log));
  }
  const auto report = eval::evaluate(logs, truth, manifest.classes(), cfg.eval.thresholds, cfg.eval.ap_mode);
  out << eval::format_report(report);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int trials, double tolerance, std::ostream& out) {
  GradientSuiteOptions options;
  options.seed = seed;
  options.trials = trials;
  bool ok = true;
  for (const GradientCheck& c : run_gradient_suite(options)) {
    const bool pass = c.result.max_relative_error <= tolerance;
    ok = ok && pass;
    char line[200];
    std::snprintf(line, sizeof(line), "%s\ttrial=%d\tmax_rel_err=%.3e\tworst=%s[%lld]\t%s\n", c.loss.c_str(), c.trial,
                  c.result.max_relative_error, c.result.worst_parameter.c_str(),
                  static_cast<long long>(c.result.worst_index), pass ? "ok" : "FAIL");
    out << line;
  }
  if (!ok) throw std::runtime_error("gradient check exceeded tolerance " + std::to_string(tolerance));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Logger log(err, verbosity_from_env());
  CLI::App app{"Weakly supervised online action detection"};
  app.require_subcommand(1);

  ConfigFlags synth_flags, train_flags, infer_flags, eval_flags, grad_flags;
  std::optional<std::uint64_t> seed;
  std::string out_dir, manifest, split = "test", ckpt, features, video_id, det_dir;
  double fps = 1.0, tolerance = 1e-4;
  int trials = 3;
  bool keep_epochs = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_flags.attach(synth);
  synth->add_option("--seed", seed, "Corpus seed (synth.seed)");
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train on a manifest's training split");
  train_flags.attach(train_cmd);
  train_cmd->add_option("--seed", seed, "Training seed");
  train_cmd->add_option("--manifest", manifest, "Corpus manifest")->required();
  train_cmd->add_option("--out", out_dir, "Run directory")->required();
  train_cmd->add_flag("--keep-epochs", keep_epochs, "Write a checkpoint after every epoch");

  auto* infer = app.add_subcommand("infer", "Stream videos through a trained model");
  infer_flags.attach(infer);
  infer->add_option("--checkpoint", ckpt, "Model checkpoint")->required();
  infer->add_option("--manifest", manifest, "Corpus manifest");
  infer->add_option("--split", split, "train or test");
  infer->add_option("--features", features, "Single feature file instead of a manifest");
  infer->add_option("--video-id", video_id, "Video id for --features");
  infer->add_option("--fps", fps, "Chunk rate for --features");
  infer->add_option("--out", out_dir, "Directory for detection logs")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Score detection logs against ground truth");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--manifest", manifest, "Corpus manifest")->required();
  eval_cmd->add_option("--split", split, "train or test");
  eval_cmd->add_option("--detections", det_dir, "Directory of detection logs")->required();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  grad_flags.attach(grad);
  grad->add_option("--seed", seed, "Instance seed");
  grad->add_option("--trials", trials, "Instances per loss");
  grad->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (synth->parsed()) {
      RunConfig cfg = synth_flags.resolve();
      if (seed) cfg.synth.seed = *seed;
      return cmd_synth(cfg, out_dir, out, log);
    }
    if (train_cmd->parsed()) {
      RunConfig cfg = train_flags.resolve();
      if (seed) cfg.train.seed = *seed;
      return cmd_train(cfg, manifest, out_dir, keep_epochs, out, log);
    }
    if (infer->parsed()) {
      return cmd_infer(infer_flags.resolve(), ckpt, manifest, split, features, video_id, fps, out_dir, out);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_flags.resolve(), manifest, split, det_dir, out);
    if (grad->parsed()) {
      grad_flags.resolve();
      return cmd_gradcheck(seed.value_or(1), trials, tolerance, out);
    }
  } catch (const UsageError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const UnknownKey& e) {
    err << "error: config: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: parse: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: runtime: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace woad
