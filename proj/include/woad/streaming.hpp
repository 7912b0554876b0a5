// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "woad/model.hpp"
#include "woad/oar.hpp"

namespace woad {

struct StreamOptions {
  /// The winning combined score must exceed this, strictly.
  double score_threshold = 0.0;
  /// When false, combined start scores are the action probabilities alone.
  bool use_start_head = true;
};

struct StartEvent {
  std::int64_t frame = 0;
  double time_s = 0.0;
  int cls = 0;
  double confidence = 0.0;
};

/// One frame of streaming output. Buffers are owned by the session and
/// overwritten by the next step.
struct StepOutput {
  std::int64_t frame = 0;
  oar::FrameOutput output;
  /// as_c = a_c * st_start for actions, a_0 * st_non_start for background.
  Vector combined;
  int predicted = 0;
  std::optional<StartEvent> event;
};

/// Causal per-stream inference state. Single owner; parameters are shared
/// read-only and must outlive the session.
class StreamSession {
 public:
  StreamSession(const Model& model, double fps, StreamOptions options = {});

  /// Consumes one raw feature frame. A dimension mismatch poisons the session:
  /// this and every later call throw.
  const StepOutput& step(const Eigen::Ref<const Vector>& raw);

  std::int64_t frame() const { return state_.frame; }
  double fps() const { return fps_; }
  int previous_class() const { return previous_; }
  bool poisoned() const { return poisoned_; }
  const oar::OarState& state() const { return state_; }

 private:
  const Model* model_;
  double fps_;
  StreamOptions options_;
  oar::OarState state_;
  Vector features_;
  Vector pooled_;
  StepOutput out_;
  int previous_ = 0;
  bool poisoned_ = false;
};

/// Lowest index wins ties, so background beats actions on exact ties.
int argmax_lowest(const Vector& scores);

/// Start criteria: the winner is an action, its combined score beats the
/// threshold strictly, and it differs from the previous frame's winner.
inline bool fires_start(int predicted, int previous, double score, double threshold) {
  return predicted != 0 && score > threshold && predicted != previous;
}

/// Combined start scores from the two heads.
void combine_start_scores(const oar::FrameOutput& out, bool use_start_head, Vector& combined);

/// Per-frame record of a whole stream.
struct DetectionLog {
  std::string video_id;
  double fps = 1.0;
  Matrix action_prob;  // T x (C+1)
  Matrix start_prob;   // T x 2
  Matrix combined;     // T x (C+1)
  std::vector<int> predicted;
  std::vector<std::uint8_t> event_flags;
  std::vector<StartEvent> events;

  int length() const { return static_cast<int>(action_prob.rows()); }
};

/// Drives `session` over every row of `raw`.
DetectionLog run_stream(StreamSession& session, const Matrix& raw, std::string video_id = {});

}  // namespace woad
