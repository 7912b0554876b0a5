// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "woad/numerics.hpp"
#include "woad/random.hpp"

// Online action recognizer: a causal recurrent cell, windowed max pooling of
// recent hiddens, a (C+1)-way action head and a 2-way start head.
namespace woad::oar {

struct OarShape {
  int input_dim = 0;
  int hidden = 64;
  /// Positive classes; the action head has classes + 1 outputs.
  int classes = 0;
  /// Pooling window M; the ring holds M + 1 hiddens.
  int window = 3;
  /// false replaces the LSTM with two fully connected layers.
  bool recurrent = true;
};

struct OarParams {
  OarShape shape;
  // LSTM, gate blocks ordered [input | forget | candidate | output].
  Parameter lstm_wx;
  Parameter lstm_wh;
  Parameter lstm_b;
  // Feed-forward replacement.
  Parameter ff1_w;
  Parameter ff1_b;
  Parameter ff2_w;
  Parameter ff2_b;
  // Heads, no bias.
  Parameter head_action;
  Parameter head_start;

  OarParams() = default;
  explicit OarParams(const OarShape& shape);

  /// Uniform(-1/sqrt(fan), 1/sqrt(fan)) weights, zero biases, forget bias +1.
  void initialize(Rng& rng);

  ParameterList parameters();
};

/// Fixed-capacity FIFO of the most recent hiddens with their frame indices.
class HiddenRing {
 public:
  HiddenRing() = default;
  HiddenRing(int capacity, int hidden);

  void push(const Vector& h, std::int64_t frame);
  void clear();

  int size() const { return size_; }
  int capacity() const { return static_cast<int>(rows_.rows()); }

  /// Entrywise max into `out`. `source`, when given, receives the frame each
  /// entry came from (earliest on ties).
  void pool(Vector& out, std::vector<std::int64_t>* source = nullptr) const;

 private:
  Matrix rows_;
  std::vector<std::int64_t> frames_;
  int head_ = 0;
  int size_ = 0;
};

struct OarState {
  Vector h;
  Vector c;
  HiddenRing ring;
  std::int64_t frame = 0;
  // Scratch reused every step.
  Vector gates;
  Vector ff_hidden;

  static OarState initial(const OarShape& shape);
};

/// Activations of one step kept for the backward pass.
struct StepCache {
  Vector h_prev, c_prev;
  Vector input_gate, forget_gate, candidate, output_gate;
  Vector c, tanh_c;
  Vector ff_pre, ff_hidden;
  Vector h;
};

/// Advances the recurrent cell by one frame and pushes the new hidden.
/// Throws std::domain_error if the state becomes non-finite.
void lstm_step(OarState& state, const Eigen::Ref<const Vector>& input, const OarParams& params,
               StepCache* cache = nullptr);

/// Two-layer replacement for the LSTM (ReLU then tanh); same state contract.
void feedforward_step(OarState& state, const Eigen::Ref<const Vector>& input,
                      const OarParams& params, StepCache* cache = nullptr);

/// Dispatches on params.shape.recurrent.
void cell_step(OarState& state, const Eigen::Ref<const Vector>& input, const OarParams& params,
               StepCache* cache = nullptr);

Vector temporal_pool(const HiddenRing& ring);

struct FrameOutput {
  /// C+1 probabilities, index 0 is background.
  Vector action;
  /// [non-start, start].
  Vector start;
};

FrameOutput heads(const Vector& hidden, const Vector& pooled, const OarParams& params);

/// heads() writing into preallocated outputs of the right size.
void heads_into(const Vector& hidden, const Vector& pooled, const OarParams& params,
                FrameOutput& out);

/// Full forward pass over one training chunk from a zero state.
struct SequenceTrace {
  std::vector<StepCache> steps;
  std::vector<std::vector<std::int64_t>> pool_source;
  Matrix pooled;       // T x H
  Matrix action_prob;  // T x (C+1)
  Matrix start_prob;   // T x 2
};

SequenceTrace forward_sequence(const Matrix& inputs, const OarParams& params);

/// Backpropagation through time. Gradients w.r.t. the head logits come in;
/// parameter gradients are accumulated into `params` and dL/d(inputs) is added
/// to `grad_inputs` when given.
void backward_sequence(const Matrix& inputs, OarParams& params, const SequenceTrace& trace,
                       const Matrix& grad_action_logits, const Matrix& grad_start_logits,
                       Matrix* grad_inputs);

/// Mean over frames of -ln a[label]. `grad_logits` is dL/d(action logits).
double frame_loss(const Matrix& action_prob, std::span<const int> labels,
                  Matrix* grad_logits = nullptr);

enum class StartNormalization {
  /// Average over the sampled frames.
  Selected,
  /// Divide by every frame in the batch.
  AllFrames,
};

struct StartLossOptions {
  double gamma = 2.0;
  int negative_ratio = 3;
  StartNormalization normalization = StartNormalization::Selected;
};

/// All start frames plus min(ratio * positives, available) negatives drawn
/// without replacement; one negative when there are no positives.
std::vector<std::uint8_t> select_start_frames(std::span<const std::uint8_t> starts,
                                              int negative_ratio, Rng& rng);

/// Focal loss -(1 - p)^gamma ln p on the true start class of each selected frame.
double start_loss(const Matrix& start_prob, std::span<const std::uint8_t> starts,
                  std::span<const std::uint8_t> selected, double gamma,
                  StartNormalization normalization = StartNormalization::Selected,
                  Matrix* grad_logits = nullptr);

double start_loss(const Matrix& start_prob, std::span<const std::uint8_t> starts,
                  const StartLossOptions& options, Rng& rng, Matrix* grad_logits = nullptr);

inline double oar_loss(double frame, double start) { return frame + start; }

}  // namespace woad::oar
