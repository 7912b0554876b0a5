// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace woad {

namespace {

constexpr std::uint64_t kSupervisionStream = 0x5eedf00dcafe0001ULL;
constexpr std::uint64_t kDataStream = 0x5eedf00dcafe0002ULL;

struct VideoWork {
  Matrix features;  // trunk output
  Matrix scores;    // T x C
  Vector video_scores;
  std::vector<oar::SequenceTrace> chunks;
};

}  // namespace

ModelShape TrainConfig::model_shape(int input_dim, int classes) const {
  ModelShape s;
  s.input_dim = input_dim;
  s.feature_dim = feature_dim;
  s.hidden = hidden;
  s.classes = classes;
  s.window = ablation.no_temporal_pool ? 0 : window;
  s.recurrent = !ablation.no_rnn;
  return s;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field) {
    throw std::invalid_argument("invalid training config: " + field);
  };
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
  if (refresh_interval < 1) fail("refresh_interval must be >= 1");
  if (batch_videos < 1) fail("batch_videos must be >= 1");
  if (seq_len < 1) fail("seq_len must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(strong_fraction >= 0.0 && strong_fraction <= 1.0)) fail("strong_fraction must be in [0, 1]");
  if (!(ground_truth_ratio >= 0.0 && ground_truth_ratio <= 1.0)) {
    fail("ground_truth_ratio must be in [0, 1]");
  }
  if (kappa < 1) fail("kappa must be >= 1");
  if (!std::isfinite(cas_margin)) fail("cas_margin must be finite");
  if (!std::isfinite(proposals.class_threshold) || !std::isfinite(proposals.score_threshold)) {
    fail("proposal thresholds must be finite");
  }
  if (proposals.gap < 0 || proposals.min_length < 1) fail("gap must be >= 0 and min_length >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (feature_dim < 0) fail("feature_dim must be >= 0");
  if (window < 0) fail("window must be >= 0");
  if (!(start.gamma >= 0.0)) fail("gamma must be >= 0");
  if (start.negative_ratio < 0) fail("negative_ratio must be >= 0");
  if (!(adam.learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(adam.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
}

std::vector<SupervisionTag> assign_supervision(const std::vector<bool>& strong_available,
                                               double ground_truth_ratio, Rng& rng) {
  std::vector<SupervisionTag> tags(strong_available.size());
  std::vector<std::size_t> strong;
  for (std::size_t v = 0; v < strong_available.size(); ++v) {
    tags[v].strong = strong_available[v];
    if (strong_available[v]) strong.push_back(v);
  }
  if (strong.empty()) return tags;

  const double quota = ground_truth_ratio * static_cast<double>(strong.size());
  const double floor_gt = std::floor(quota + 1e-9);
  const double remainder_gt = quota - floor_gt;
  const double remainder_pseudo = std::max(0.0, 1.0 - remainder_gt);
  std::size_t n_gt = static_cast<std::size_t>(floor_gt);
  // Two parties share one leftover seat when the quota is fractional.
  if (remainder_gt > 1e-9 && remainder_gt >= remainder_pseudo) ++n_gt;
  n_gt = std::min(n_gt, strong.size());

  rng.shuffle(strong);
  for (std::size_t k = 0; k < n_gt; ++k) tags[strong[k]].use_ground_truth = true;
  return tags;
}

std::vector<bool> choose_strong_videos(const Corpus& corpus, double strong_fraction, Rng& rng) {
  std::vector<std::size_t> annotated;
  for (std::size_t v = 0; v < corpus.videos.size(); ++v) {
    if (corpus.videos[v].ground_truth.has_value()) annotated.push_back(v);
  }
  std::vector<bool> out(corpus.videos.size(), false);
  const auto n = static_cast<std::size_t>(
      std::floor(strong_fraction * static_cast<double>(annotated.size()) + 0.5));
  rng.shuffle(annotated);
  for (std::size_t k = 0; k < std::min(n, annotated.size()); ++k) out[annotated[k]] = true;
  return out;
}

LabelTrack mine_pseudo_labels(const Model& model, const Video& video, const TrainConfig& cfg) {
  const Matrix features = trunk_forward(video.raw, model.trunk);
  const tpg::FrameScores scores = tpg::frame_scores(features, model.tpg_weight.value, video.id);
  const Vector video_scores = tpg::video_class_scores(scores.scores, cfg.kappa);
  const tpg::ProposalSet proposals =
      tpg::generate_proposals(scores, video_scores, video.label(), cfg.proposals);
  return tpg::proposals_to_labels(proposals, video.length());
}

int Batch::total_frames() const {
  int n = 0;
  for (const BatchItem& item : items) n += item.video->length();
  return n;
}

Batch make_batch(std::vector<BatchItem> items, const TrainConfig& cfg, Rng& rng) {
  Batch batch;
  batch.items = std::move(items);
  std::vector<std::uint8_t> starts;
  starts.reserve(static_cast<std::size_t>(batch.total_frames()));
  for (const BatchItem& item : batch.items) {
    if (item.labels == nullptr || item.labels->length() != item.video->length()) {
      throw std::invalid_argument("make_batch: video '" + item.video->id +
                                  "' has no label track of matching length");
    }
    starts.insert(starts.end(), item.labels->start_bits.begin(), item.labels->start_bits.end());
  }
  batch.start_selection = oar::select_start_frames(starts, cfg.start.negative_ratio, rng);
  return batch;
}

LossBreakdown total_loss(Model& model, const Batch& batch, const TrainConfig& cfg,
                         bool accumulate) {
  const std::size_t B = batch.items.size();
  if (B == 0) throw std::invalid_argument("total_loss: empty batch");
  const int C = model.shape.classes;
  const int total_frames = batch.total_frames();
  const double lambda = cfg.ablation.no_tpg_loss ? 0.0 : cfg.lambda;

  std::vector<VideoWork> work(B);
  std::vector<tpg::VideoRegions> regions(B);
  Matrix action_prob(total_frames, C + 1);
  Matrix start_prob(total_frames, 2);
  std::vector<int> frame_labels;
  std::vector<std::uint8_t> start_bits;
  frame_labels.reserve(static_cast<std::size_t>(total_frames));
  start_bits.reserve(static_cast<std::size_t>(total_frames));

  LossBreakdown loss;
  std::vector<Vector> grad_video_scores(B);
  int offset = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const Video& video = *batch.items[b].video;
    const LabelTrack& labels = *batch.items[b].labels;
    VideoWork& w = work[b];
    w.features = trunk_forward(video.raw, model.trunk);
    w.scores = w.features * model.tpg_weight.value;
    w.video_scores = tpg::video_class_scores(w.scores, cfg.kappa);
    loss.mil += tpg::mil_loss(w.video_scores, video.label(), &grad_video_scores[b]);
    if (video.length() >= 2) {
      for (int cls : video.classes) {
        regions[b].push_back(tpg::region_representation(w.features, w.scores, cls, video.id));
      }
    }

    const int T = video.length();
    for (int begin = 0; begin < T; begin += cfg.seq_len) {
      const int len = std::min(cfg.seq_len, T - begin);
      w.chunks.push_back(oar::forward_sequence(w.features.middleRows(begin, len), model.oar));
      const oar::SequenceTrace& trace = w.chunks.back();
      action_prob.middleRows(offset + begin, len) = trace.action_prob;
      start_prob.middleRows(offset + begin, len) = trace.start_prob;
    }
    frame_labels.insert(frame_labels.end(), labels.frame_labels.begin(), labels.frame_labels.end());
    start_bits.insert(start_bits.end(), labels.start_bits.begin(), labels.start_bits.end());
    offset += T;
  }
  loss.mil /= static_cast<double>(B);

  std::vector<std::vector<tpg::RegionGrad>> region_grads;
  loss.cas = tpg::cas_loss(regions, cfg.cas_margin, cfg.cas_form,
                           accumulate && lambda != 0.0 ? &region_grads : nullptr);

  Matrix grad_action, grad_start;
  loss.frame = oar::frame_loss(action_prob, frame_labels, accumulate ? &grad_action : nullptr);
  loss.start = oar::start_loss(start_prob, start_bits, batch.start_selection, cfg.start.gamma,
                               cfg.start.normalization, accumulate ? &grad_start : nullptr);
  loss.oar = oar::oar_loss(loss.frame, loss.start);
  loss.tpg = loss.mil + loss.cas;
  loss.total = lambda == 0.0 ? loss.oar : loss.oar + lambda * loss.tpg;

  if (!accumulate) return loss;

  offset = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const Video& video = *batch.items[b].video;
    VideoWork& w = work[b];
    const int T = video.length();
    Matrix grad_features = Matrix::Zero(T, w.features.cols());

    int chunk = 0;
    for (int begin = 0; begin < T; begin += cfg.seq_len, ++chunk) {
      const int len = std::min(cfg.seq_len, T - begin);
      Matrix grad_chunk = Matrix::Zero(len, w.features.cols());
      oar::backward_sequence(w.features.middleRows(begin, len), model.oar, w.chunks[chunk],
                             grad_action.middleRows(offset + begin, len),
                             grad_start.middleRows(offset + begin, len), &grad_chunk);
      grad_features.middleRows(begin, len) += grad_chunk;
    }

    if (lambda != 0.0) {
      const Vector g_video = grad_video_scores[b] * (lambda / static_cast<double>(B));
      Matrix grad_scores = tpg::video_class_scores_backward(w.scores, g_video, cfg.kappa);
      for (std::size_t r = 0; r < regions[b].size(); ++r) {
        const tpg::RegionGrad& rg = region_grads[b][r];
        tpg::region_representation_backward(w.features, regions[b][r], lambda * rg.psi,
                                            lambda * rg.phi, grad_features, grad_scores);
      }
      model.tpg_weight.grad.noalias() += w.features.transpose() * grad_scores;
      grad_features.noalias() += grad_scores * model.tpg_weight.value.transpose();
    }

    trunk_backward(video.raw, w.features, grad_features, model.trunk);
    offset += T;
  }
  return loss;
}

std::string format_metrics(const IterationMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld\t%.9g\t%.9g\t%.9g\t%.9g",
                static_cast<long long>(m.iteration), m.loss.oar, m.loss.mil, m.loss.cas,
                m.loss.total);
  return buf;
}

Model initial_model(const Corpus& corpus, const TrainConfig& cfg) {
  if (corpus.videos.empty()) throw std::invalid_argument("train: empty corpus");
  Model model(cfg.model_shape(corpus.input_dim(), corpus.classes));
  Rng init(cfg.seed);
  model.initialize(init);
  return model;
}

TrainResult train(const Corpus& corpus, const TrainConfig& cfg,
                  const std::function<void(const EpochSnapshot&)>& on_epoch) {
  cfg.validate();
  TrainResult result;
  result.model = initial_model(corpus, cfg);
  Model& model = result.model;

  Rng supervision_rng(cfg.seed ^ kSupervisionStream);
  Rng data_rng(cfg.seed ^ kDataStream);
  const std::vector<bool> strong = choose_strong_videos(corpus, cfg.strong_fraction, supervision_rng);

  const std::size_t n = corpus.videos.size();
  result.tracks.resize(n);
  Adam adam(cfg.adam);
  const ParameterList params = model.parameters();

  std::int64_t iteration = 0;
  int last_good_epoch = -1;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    data_rng.shuffle(order);

    for (std::size_t first = 0; first < n; first += static_cast<std::size_t>(cfg.batch_videos)) {
      if (iteration % cfg.refresh_interval == 0) {
        result.tags = assign_supervision(strong, cfg.ground_truth_ratio, supervision_rng);
        for (std::size_t v = 0; v < n; ++v) {
          const Video& video = corpus.videos[v];
          if (result.tags[v].use_ground_truth) {
            result.tracks[v] = *video.ground_truth;
            result.tracks[v].provenance = Provenance::GroundTruth;
          } else {
            result.tracks[v] = mine_pseudo_labels(model, video, cfg);
          }
        }
        result.refresh_iterations.push_back(iteration);
      }

      std::vector<BatchItem> items;
      const std::size_t last = std::min(n, first + static_cast<std::size_t>(cfg.batch_videos));
      for (std::size_t k = first; k < last; ++k) {
        items.push_back({&corpus.videos[order[k]], &result.tracks[order[k]]});
      }
      const Batch batch = make_batch(std::move(items), cfg, data_rng);

      zero_grads(params);
      const LossBreakdown loss = total_loss(model, batch, cfg, true);
      if (!std::isfinite(loss.total) || loss.total > cfg.divergence_threshold) {
        throw TrainingDiverged("training diverged at iteration " + std::to_string(iteration) +
                                   ": total loss " + std::to_string(loss.total),
                               iteration, last_good_epoch);
      }
      try {
        adam.step(params);
      } catch (const NonFiniteGradient& e) {
        throw TrainingDiverged(std::string("training diverged: ") + e.what(), iteration,
                               last_good_epoch);
      }
      result.log.push_back({iteration, loss});
      ++iteration;
    }

    result.epoch_hashes.push_back(parameter_hash(model));
    last_good_epoch = epoch;
    if (on_epoch) {
      on_epoch(EpochSnapshot{epoch, &model, &result.tracks, &result.tags, data_rng.state()});
    }
  }
  return result;
}

}  // namespace woad
