// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/streaming.hpp"

#include <stdexcept>

#include "woad/trunk.hpp"

namespace woad {

int argmax_lowest(const Vector& scores) {
  int best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = static_cast<int>(c);
  }
  return best;
}

void combine_start_scores(const oar::FrameOutput& out, bool use_start_head, Vector& combined) {
  combined = out.action;
  if (!use_start_head) return;
  combined(0) *= out.start(0);
  combined.tail(combined.size() - 1) *= out.start(1);
}

StreamSession::StreamSession(const Model& model, double fps, StreamOptions options)
    : model_(&model), fps_(fps), options_(options), state_(oar::OarState::initial(model.oar.shape)) {
  if (!(fps > 0.0)) throw std::invalid_argument("StreamSession: fps must be > 0");
  const int C = model.shape.classes;
  features_ = Vector::Zero(model.trunk.output_dim());
  pooled_ = Vector::Zero(model.shape.hidden);
  out_.output.action = Vector::Zero(C + 1);
  out_.output.start = Vector::Zero(2);
  out_.combined = Vector::Zero(C + 1);
}

const StepOutput& StreamSession::step(const Eigen::Ref<const Vector>& raw) {
  if (poisoned_) throw std::logic_error("StreamSession: session poisoned by an earlier error");
  if (raw.size() != model_->trunk.input_dim()) {
    poisoned_ = true;
    throw std::domain_error("StreamSession: frame has dimension " + std::to_string(raw.size()) +
                            ", expected " + std::to_string(model_->trunk.input_dim()));
  }

  out_.frame = state_.frame;
  trunk_forward_frame(raw, model_->trunk, features_);
  try {
    oar::cell_step(state_, features_, model_->oar);
  } catch (...) {
    poisoned_ = true;
    throw;
  }
  state_.ring.pool(pooled_);
  oar::heads_into(state_.h, pooled_, model_->oar, out_.output);
  combine_start_scores(out_.output, options_.use_start_head, out_.combined);

  out_.predicted = argmax_lowest(out_.combined);
  out_.event.reset();
  const double confidence = out_.combined(out_.predicted);
  if (fires_start(out_.predicted, previous_, confidence, options_.score_threshold)) {
    out_.event = StartEvent{out_.frame, static_cast<double>(out_.frame) / fps_, out_.predicted,
                            confidence};
  }
  previous_ = out_.predicted;
  return out_;
}

DetectionLog run_stream(StreamSession& session, const Matrix& raw, std::string video_id) {
  const Eigen::Index T = raw.rows();
  if (T == 0) throw std::invalid_argument("run_stream: empty sequence");
  DetectionLog log;
  log.video_id = std::move(video_id);
  log.fps = session.fps();
  for (Eigen::Index t = 0; t < T; ++t) {
    const StepOutput& out = session.step(raw.row(t).transpose());
    if (t == 0) {
      log.action_prob.resize(T, out.output.action.size());
      log.start_prob.resize(T, 2);
      log.combined.resize(T, out.combined.size());
    }
    log.action_prob.row(t) = out.output.action.transpose();
    log.start_prob.row(t) = out.output.start.transpose();
    log.combined.row(t) = out.combined.transpose();
    log.predicted.push_back(out.predicted);
    log.event_flags.push_back(out.event.has_value() ? 1 : 0);
    if (out.event) log.events.push_back(*out.event);
  }
  return log;
}

}  // namespace woad
