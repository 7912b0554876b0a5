// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/gradient_suite.hpp"

#include "woad/model.hpp"
#include "woad/oar.hpp"
#include "woad/random.hpp"
#include "woad/tpg.hpp"
#include "woad/training.hpp"

namespace woad {

namespace {

void fill_normal(Matrix& m, Rng& rng, double scale = 1.0) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
}

std::vector<int> random_classes(int C, Rng& rng) {
  std::vector<int> out;
  for (int c = 1; c <= C; ++c) {
    if (rng.uniform() < 0.5) out.push_back(c);
  }
  if (out.empty()) out.push_back(rng.range(1, C));
  return out;
}

GradCheckResult check_mil(Rng& rng, const GradientSuiteOptions& o) {
  const int T = rng.range(1, o.max_frames);
  const int C = rng.range(1, o.max_classes);
  Parameter scores("scores", T, C);
  fill_normal(scores.value, rng);
  const tpg::VideoLabel label{"v", random_classes(C, rng)};
  auto loss = [&](bool accumulate) {
    const Vector video = tpg::video_class_scores(scores.value);
    Vector grad;
    const double l = tpg::mil_loss(video, label, accumulate ? &grad : nullptr);
    if (accumulate) scores.grad += tpg::video_class_scores_backward(scores.value, grad);
    return l;
  };
  Parameter* params[] = {&scores};
  return grad_check(loss, params, o.step);
}

GradCheckResult check_cas(Rng& rng, const GradientSuiteOptions& o) {
  const int C = rng.range(1, o.max_classes);
  const int D = rng.range(2, o.max_hidden);
  const int videos = 3;
  std::vector<Parameter> features, scores;
  std::vector<std::vector<int>> classes;
  features.reserve(videos);
  scores.reserve(videos);
  for (int v = 0; v < videos; ++v) {
    const int T = rng.range(2, o.max_frames);
    features.emplace_back("features" + std::to_string(v), T, D);
    scores.emplace_back("scores" + std::to_string(v), T, C);
    fill_normal(features.back().value, rng);
    fill_normal(scores.back().value, rng);
    // Every video shares class 1 so at least one pair exists.
    auto cls = random_classes(C, rng);
    if (cls.front() != 1) cls.insert(cls.begin(), 1);
    classes.push_back(cls);
  }
  // Large enough that most hinges are active.
  const double margin = 1.0;
  auto loss = [&](bool accumulate) {
    std::vector<tpg::VideoRegions> regions(videos);
    for (int v = 0; v < videos; ++v) {
      for (int cls : classes[v]) {
        regions[v].push_back(tpg::region_representation(features[v].value, scores[v].value, cls));
      }
    }
    std::vector<std::vector<tpg::RegionGrad>> grads;
    const double l = tpg::cas_loss(regions, margin, tpg::CasForm::Ranking, accumulate ? &grads : nullptr);
    if (accumulate) {
      for (int v = 0; v < videos; ++v) {
        for (std::size_t r = 0; r < regions[v].size(); ++r) {
          tpg::region_representation_backward(features[v].value, regions[v][r], grads[v][r].psi,
                                              grads[v][r].phi, features[v].grad, scores[v].grad);
        }
      }
    }
    return l;
  };
  ParameterList params;
  for (int v = 0; v < videos; ++v) {
    params.push_back(&features[v]);
    params.push_back(&scores[v]);
  }
  return grad_check(loss, params, o.step);
}

// Recognizer losses share one harness: random inputs, random labels.
struct OarInstance {
  oar::OarParams params;
  Parameter inputs;
  std::vector<int> labels;
  std::vector<std::uint8_t> starts;
  std::vector<std::uint8_t> selected;
};

OarInstance make_oar_instance(Rng& rng, const GradientSuiteOptions& o, bool recurrent, int window) {
  const int T = rng.range(2, o.max_frames);
  oar::OarShape shape;
  shape.input_dim = rng.range(2, o.max_hidden);
  shape.hidden = rng.range(2, o.max_hidden);
  shape.classes = rng.range(1, o.max_classes);
  shape.window = window;
  shape.recurrent = recurrent;
  OarInstance inst{oar::OarParams(shape), Parameter("inputs", T, shape.input_dim), {}, {}, {}};
  inst.params.initialize(rng);
  // Spread the weights so the gates and heads are not all near 0.5.
  for (Parameter* p : inst.params.parameters()) p->value *= 2.0;
  fill_normal(inst.inputs.value, rng);
  for (int t = 0; t < T; ++t) {
    inst.labels.push_back(rng.range(0, shape.classes));
    inst.starts.push_back(rng.uniform() < 0.3 ? 1 : 0);
  }
  inst.selected = oar::select_start_frames(inst.starts, 3, rng);
  return inst;
}

GradCheckResult check_oar(Rng& rng, const GradientSuiteOptions& o, bool frame_term) {
  const bool recurrent = rng.uniform() < 0.75;
  const int window = rng.range(0, 3);
  OarInstance inst = make_oar_instance(rng, o, recurrent, window);
  auto loss = [&](bool accumulate) {
    const oar::SequenceTrace trace = oar::forward_sequence(inst.inputs.value, inst.params);
    const Eigen::Index T = inst.inputs.value.rows();
    Matrix grad_action = Matrix::Zero(T, trace.action_prob.cols());
    Matrix grad_start = Matrix::Zero(T, 2);
    const double l = frame_term
                         ? oar::frame_loss(trace.action_prob, inst.labels, accumulate ? &grad_action : nullptr)
                         : oar::start_loss(trace.start_prob, inst.starts, inst.selected, 2.0,
                                           oar::StartNormalization::Selected, accumulate ? &grad_start : nullptr);
    if (accumulate) {
      oar::backward_sequence(inst.inputs.value, inst.params, trace, grad_action, grad_start, &inst.inputs.grad);
    }
    return l;
  };
  ParameterList params = inst.params.parameters();
  params.push_back(&inst.inputs);
  return grad_check(loss, params, o.step);
}

GradCheckResult check_total(Rng& rng, const GradientSuiteOptions& o) {
  const int C = rng.range(1, o.max_classes);
  const int D_in = rng.range(2, o.max_hidden);
  Corpus corpus;
  corpus.classes = C;
  std::vector<LabelTrack> tracks;
  const int videos = 3;
  for (int v = 0; v < videos; ++v) {
    Video video;
    video.id = "v" + std::to_string(v);
    video.raw = Matrix(rng.range(2, o.max_frames), D_in);
    fill_normal(video.raw, rng);
    video.classes = random_classes(C, rng);
    if (video.classes.front() != 1) video.classes.insert(video.classes.begin(), 1);
    LabelTrack track = LabelTrack::background(video.length(), Provenance::Pseudo);
    for (int t = 0; t < video.length(); ++t) {
      if (rng.uniform() < 0.4) {
        track.frame_labels[t] = video.classes[rng.below(video.classes.size())];
        track.start_bits[t] = t == 0 || track.frame_labels[t - 1] != track.frame_labels[t];
      }
    }
    tracks.push_back(std::move(track));
    corpus.videos.push_back(std::move(video));
  }

  TrainConfig cfg;
  cfg.hidden = rng.range(2, o.max_hidden);
  cfg.feature_dim = rng.range(2, o.max_hidden);
  cfg.window = rng.range(0, 3);
  cfg.ablation.no_rnn = rng.uniform() < 0.25;
  cfg.seq_len = rng.range(3, o.max_frames);
  cfg.cas_margin = 1.0;
  cfg.seed = rng.next();
  Model model = initial_model(corpus, cfg);
  // Keep every rectifier away from its kink: dead trunk rows would tie the
  // top-k and pooling selections.
  model.trunk.weight.value *= 0.25;
  model.trunk.bias.value.setConstant(1.0);

  std::vector<BatchItem> items;
  for (int v = 0; v < videos; ++v) items.push_back({&corpus.videos[v], &tracks[v]});
  const Batch batch = make_batch(items, cfg, rng);
  auto loss = [&](bool accumulate) { return total_loss(model, batch, cfg, accumulate).total; };
  return grad_check(loss, model.parameters(), o.step);
}

}  // namespace

std::vector<GradientCheck> run_gradient_suite(const GradientSuiteOptions& options) {
  Rng rng(options.seed);
  std::vector<GradientCheck> out;
  for (int trial = 0; trial < options.trials; ++trial) {
    out.push_back({"mil", trial, check_mil(rng, options)});
    out.push_back({"cas", trial, check_cas(rng, options)});
    out.push_back({"frame", trial, check_oar(rng, options, true)});
    out.push_back({"start", trial, check_oar(rng, options, false)});
    out.push_back({"total", trial, check_total(rng, options)});
  }
  return out;
}

}  // namespace woad
