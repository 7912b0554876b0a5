// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "woad/labels.hpp"
#include "woad/model.hpp"
#include "woad/oar.hpp"
#include "woad/random.hpp"
#include "woad/tpg.hpp"

namespace woad {

struct AblationFlags {
  bool no_tpg_loss = false;
  bool no_rnn = false;
  bool no_temporal_pool = false;
  /// Inference only: combined start scores ignore the start head.
  bool no_start_head = false;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  double lambda = 0.5;
  int refresh_interval = 100;
  int batch_videos = 10;
  int seq_len = 64;
  int epochs = 50;
  std::uint64_t seed = 7;

  /// Fraction of training videos whose segment annotations are visible.
  double strong_fraction = 0.0;
  /// Among those, the fraction supervised by ground truth at each refresh.
  double ground_truth_ratio = 0.9;

  AblationFlags ablation;

  // Proposal generator.
  int kappa = tpg::kDefaultTopKDivisor;
  double cas_margin = 0.5;
  tpg::CasForm cas_form = tpg::CasForm::Ranking;
  tpg::ProposalOptions proposals;

  // Recognizer.
  int hidden = 64;
  int feature_dim = 0;
  int window = 3;
  oar::StartLossOptions start;

  AdamOptions adam;
  double divergence_threshold = 1e6;

  /// Model shape implied by this config for a corpus of the given geometry.
  ModelShape model_shape(int input_dim, int classes) const;
  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

/// One training or test video with its raw (pre-trunk) features.
struct Video {
  std::string id;
  Matrix raw;
  std::vector<int> classes;
  double fps = 1.0;
  /// Segment-level labels, when annotated.
  std::optional<LabelTrack> ground_truth;

  int length() const { return static_cast<int>(raw.rows()); }
  tpg::VideoLabel label() const { return {id, classes}; }
};

struct Corpus {
  std::vector<Video> videos;
  int classes = 0;
  int input_dim() const { return videos.empty() ? 0 : static_cast<int>(videos.front().raw.cols()); }
};

struct SupervisionTag {
  /// Segment labels are available for this video.
  bool strong = false;
  /// This refresh period trains on ground truth rather than pseudo labels.
  bool use_ground_truth = false;
};

/// Weak-only videos always get pseudo labels. Among strong videos
/// round(ratio * n) use ground truth (largest remainder, ties to ground truth),
/// chosen by a seeded shuffle.
std::vector<SupervisionTag> assign_supervision(const std::vector<bool>& strong_available,
                                               double ground_truth_ratio, Rng& rng);

/// Seeded choice of which training videos expose their annotations.
std::vector<bool> choose_strong_videos(const Corpus& corpus, double strong_fraction, Rng& rng);

/// Runs the proposal generator offline over a full video and converts the
/// mined proposals into a pseudo label track.
LabelTrack mine_pseudo_labels(const Model& model, const Video& video, const TrainConfig& cfg);

struct BatchItem {
  const Video* video = nullptr;
  const LabelTrack* labels = nullptr;
};

struct Batch {
  std::vector<BatchItem> items;
  /// Start-loss frame selection over the concatenated batch frames.
  std::vector<std::uint8_t> start_selection;

  int total_frames() const;
};

/// Draws the start-loss negatives; everything else is fixed by `items`.
Batch make_batch(std::vector<BatchItem> items, const TrainConfig& cfg, Rng& rng);

struct LossBreakdown {
  double frame = 0.0;
  double start = 0.0;
  double mil = 0.0;
  double cas = 0.0;
  double oar = 0.0;
  double tpg = 0.0;
  double total = 0.0;
};

/// L_total = L_OAR + lambda (L_MIL + L_CAS). Adds gradients into every
/// parameter's grad when `accumulate` is set; callers zero them.
LossBreakdown total_loss(Model& model, const Batch& batch, const TrainConfig& cfg,
                         bool accumulate);

struct IterationMetrics {
  std::int64_t iteration = 0;
  LossBreakdown loss;
};

/// Tab-separated: iteration, L_OAR, L_MIL, L_CAS, L_total.
std::string format_metrics(const IterationMetrics& m);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::int64_t iteration, int last_good_epoch)
      : std::runtime_error(what), iteration(iteration), last_good_epoch(last_good_epoch) {}
  std::int64_t iteration;
  /// -1 when no epoch completed.
  int last_good_epoch;
};

struct EpochSnapshot {
  int epoch = 0;
  const Model* model = nullptr;
  const std::vector<LabelTrack>* tracks = nullptr;
  const std::vector<SupervisionTag>* tags = nullptr;
  std::string rng_state;
};

struct TrainResult {
  Model model;
  std::vector<IterationMetrics> log;
  std::vector<std::int64_t> refresh_iterations;
  std::vector<std::uint64_t> epoch_hashes;
  /// Label tracks in force at the end of training, one per corpus video.
  std::vector<LabelTrack> tracks;
  std::vector<SupervisionTag> tags;
};

/// Joint training. Deterministic for a fixed corpus and config; `on_epoch`
/// is called after every completed epoch (checkpointing).
TrainResult train(const Corpus& corpus, const TrainConfig& cfg,
                  const std::function<void(const EpochSnapshot&)>& on_epoch = {});

/// Model built and initialised exactly as train() does before its first step.
Model initial_model(const Corpus& corpus, const TrainConfig& cfg);

}  // namespace woad
