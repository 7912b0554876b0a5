// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/oar.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace woad::oar {

namespace {

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  auto flat = m.reshaped<Eigen::RowMajor>();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.uniform(-bound, bound);
}

template <typename Block>
void sigmoid_in_place(Block&& block) {
  block = (1.0 + (-block).exp()).inverse();
}

void check_input(const Eigen::Ref<const Vector>& input, const Parameter& w) {
  if (input.size() != w.value.rows()) {
    throw std::domain_error("oar: input dimension " + std::to_string(input.size()) +
                            ", expected " + std::to_string(w.value.rows()));
  }
}

void check_state(const OarState& state) {
  if (!state.h.allFinite() || !state.c.allFinite()) {
    throw std::domain_error("oar: non-finite recurrent state at frame " +
                            std::to_string(state.frame));
  }
}

}  // namespace

OarParams::OarParams(const OarShape& s) : shape(s) {
  const int D = s.input_dim;
  const int H = s.hidden;
  if (D < 1 || H < 1 || s.classes < 1 || s.window < 0) {
    throw std::invalid_argument("OarShape: dimensions must be positive and window >= 0");
  }
  if (s.recurrent) {
    lstm_wx = Parameter("oar.lstm_wx", D, 4 * H);
    lstm_wh = Parameter("oar.lstm_wh", H, 4 * H);
    lstm_b = Parameter("oar.lstm_b", 1, 4 * H);
  } else {
    ff1_w = Parameter("oar.ff1_w", D, H);
    ff1_b = Parameter("oar.ff1_b", 1, H);
    ff2_w = Parameter("oar.ff2_w", H, H);
    ff2_b = Parameter("oar.ff2_b", 1, H);
  }
  head_action = Parameter("oar.head_action", H, s.classes + 1);
  head_start = Parameter("oar.head_start", H, 2);
}

void OarParams::initialize(Rng& rng) {
  const double h_bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  if (shape.recurrent) {
    fill_uniform(lstm_wx.value, h_bound, rng);
    fill_uniform(lstm_wh.value, h_bound, rng);
    lstm_b.value.setZero();
    lstm_b.value.middleCols(shape.hidden, shape.hidden).setOnes();
  } else {
    fill_uniform(ff1_w.value, 1.0 / std::sqrt(static_cast<double>(shape.input_dim)), rng);
    ff1_b.value.setZero();
    fill_uniform(ff2_w.value, h_bound, rng);
    ff2_b.value.setZero();
  }
  fill_uniform(head_action.value, h_bound, rng);
  fill_uniform(head_start.value, h_bound, rng);
}

ParameterList OarParams::parameters() {
  ParameterList out;
  for (Parameter* p : {&lstm_wx, &lstm_wh, &lstm_b, &ff1_w, &ff1_b, &ff2_w, &ff2_b, &head_action,
                       &head_start}) {
    if (!p->empty()) out.push_back(p);
  }
  return out;
}

HiddenRing::HiddenRing(int capacity, int hidden)
    : rows_(Matrix::Zero(capacity, hidden)), frames_(static_cast<std::size_t>(capacity), 0) {
  if (capacity < 1) throw std::invalid_argument("HiddenRing: capacity must be >= 1");
}

void HiddenRing::push(const Vector& h, std::int64_t frame) {
  rows_.row(head_) = h.transpose();
  frames_[head_] = frame;
  head_ = (head_ + 1) % capacity();
  if (size_ < capacity()) ++size_;
}

void HiddenRing::clear() {
  head_ = 0;
  size_ = 0;
}

void HiddenRing::pool(Vector& out, std::vector<std::int64_t>* source) const {
  if (size_ == 0) throw std::domain_error("temporal_pool: empty ring");
  const int cap = capacity();
  const int oldest = (head_ - size_ + cap) % cap;
  out = rows_.row(oldest).transpose();
  if (source != nullptr) source->assign(static_cast<std::size_t>(out.size()), frames_[oldest]);
  for (int k = 1; k < size_; ++k) {
    const int idx = (oldest + k) % cap;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
      if (rows_(idx, j) > out(j)) {
        out(j) = rows_(idx, j);
        if (source != nullptr) (*source)[j] = frames_[idx];
      }
    }
  }
}

OarState OarState::initial(const OarShape& shape) {
  OarState s;
  s.h = Vector::Zero(shape.hidden);
  s.c = Vector::Zero(shape.hidden);
  s.ring = HiddenRing(shape.window + 1, shape.hidden);
  s.gates = Vector::Zero(4 * shape.hidden);
  s.ff_hidden = Vector::Zero(shape.hidden);
  return s;
}

void lstm_step(OarState& state, const Eigen::Ref<const Vector>& input, const OarParams& params,
               StepCache* cache) {
  check_input(input, params.lstm_wx);
  const Eigen::Index H = params.shape.hidden;
  if (cache != nullptr) {
    cache->h_prev = state.h;
    cache->c_prev = state.c;
  }

  Vector& z = state.gates;
  z.noalias() = params.lstm_wx.value.transpose() * input;
  z.noalias() += params.lstm_wh.value.transpose() * state.h;
  z += params.lstm_b.value.transpose();

  sigmoid_in_place(z.segment(0, H).array());
  sigmoid_in_place(z.segment(H, H).array());
  z.segment(2 * H, H).array() = z.segment(2 * H, H).array().tanh();
  sigmoid_in_place(z.segment(3 * H, H).array());

  const auto in = z.segment(0, H).array();
  const auto forget = z.segment(H, H).array();
  const auto cand = z.segment(2 * H, H).array();
  const auto out = z.segment(3 * H, H).array();
  state.c.array() = forget * state.c.array() + in * cand;
  state.h.array() = out * state.c.array().tanh();

  if (cache != nullptr) {
    cache->input_gate = z.segment(0, H);
    cache->forget_gate = z.segment(H, H);
    cache->candidate = z.segment(2 * H, H);
    cache->output_gate = z.segment(3 * H, H);
    cache->c = state.c;
    cache->tanh_c = state.c.array().tanh();
    cache->h = state.h;
  }
  check_state(state);
  state.ring.push(state.h, state.frame);
  ++state.frame;
}

void feedforward_step(OarState& state, const Eigen::Ref<const Vector>& input,
                      const OarParams& params, StepCache* cache) {
  check_input(input, params.ff1_w);
  Vector& hidden = state.ff_hidden;
  hidden.noalias() = params.ff1_w.value.transpose() * input;
  hidden += params.ff1_b.value.transpose();
  if (cache != nullptr) cache->ff_pre = hidden;
  hidden = hidden.cwiseMax(0.0);

  state.h.noalias() = params.ff2_w.value.transpose() * hidden;
  state.h += params.ff2_b.value.transpose();
  state.h.array() = state.h.array().tanh();

  if (cache != nullptr) {
    cache->ff_hidden = hidden;
    cache->h = state.h;
  }
  check_state(state);
  state.ring.push(state.h, state.frame);
  ++state.frame;
}

void cell_step(OarState& state, const Eigen::Ref<const Vector>& input, const OarParams& params,
               StepCache* cache) {
  if (params.shape.recurrent) {
    lstm_step(state, input, params, cache);
  } else {
    feedforward_step(state, input, params, cache);
  }
}

Vector temporal_pool(const HiddenRing& ring) {
  Vector out;
  ring.pool(out);
  return out;
}

void heads_into(const Vector& hidden, const Vector& pooled, const OarParams& params,
                FrameOutput& out) {
  if (hidden.size() != params.head_action.value.rows() ||
      pooled.size() != params.head_start.value.rows()) {
    throw std::domain_error("heads: hidden size mismatch");
  }
  out.action.noalias() = params.head_action.value.transpose() * hidden;
  softmax_in_place(out.action);
  out.start.noalias() = params.head_start.value.transpose() * pooled;
  softmax_in_place(out.start);
}

FrameOutput heads(const Vector& hidden, const Vector& pooled, const OarParams& params) {
  FrameOutput out;
  heads_into(hidden, pooled, params, out);
  return out;
}

SequenceTrace forward_sequence(const Matrix& inputs, const OarParams& params) {
  const Eigen::Index T = inputs.rows();
  const int H = params.shape.hidden;
  SequenceTrace trace;
  trace.steps.resize(static_cast<std::size_t>(T));
  trace.pool_source.resize(static_cast<std::size_t>(T));
  trace.pooled.resize(T, H);
  trace.action_prob.resize(T, params.shape.classes + 1);
  trace.start_prob.resize(T, 2);

  OarState state = OarState::initial(params.shape);
  Vector pooled;
  FrameOutput out;
  for (Eigen::Index t = 0; t < T; ++t) {
    cell_step(state, inputs.row(t).transpose(), params, &trace.steps[t]);
    state.ring.pool(pooled, &trace.pool_source[t]);
    heads_into(state.h, pooled, params, out);
    trace.pooled.row(t) = pooled.transpose();
    trace.action_prob.row(t) = out.action.transpose();
    trace.start_prob.row(t) = out.start.transpose();
  }
  return trace;
}

void backward_sequence(const Matrix& inputs, OarParams& params, const SequenceTrace& trace,
                       const Matrix& grad_action_logits, const Matrix& grad_start_logits,
                       Matrix* grad_inputs) {
  const Eigen::Index T = inputs.rows();
  const Eigen::Index H = params.shape.hidden;

  Matrix hiddens(T, H);
  for (Eigen::Index t = 0; t < T; ++t) hiddens.row(t) = trace.steps[t].h.transpose();

  params.head_action.grad.noalias() += hiddens.transpose() * grad_action_logits;
  params.head_start.grad.noalias() += trace.pooled.transpose() * grad_start_logits;

  Matrix grad_h = grad_action_logits * params.head_action.value.transpose();
  const Matrix grad_pooled = grad_start_logits * params.head_start.value.transpose();
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& source = trace.pool_source[t];
    for (Eigen::Index j = 0; j < H; ++j) grad_h(source[j], j) += grad_pooled(t, j);
  }

  if (params.shape.recurrent) {
    Vector dh_next = Vector::Zero(H);
    Vector dc_next = Vector::Zero(H);
    Vector dz(4 * H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const StepCache& s = trace.steps[t];
      const Vector dh = grad_h.row(t).transpose() + dh_next;
      const auto i = s.input_gate.array();
      const auto f = s.forget_gate.array();
      const auto g = s.candidate.array();
      const auto o = s.output_gate.array();
      const auto tc = s.tanh_c.array();

      const Eigen::ArrayXd d_out = dh.array() * tc;
      const Eigen::ArrayXd dc = dc_next.array() + dh.array() * o * (1.0 - tc.square());
      dz.segment(0, H) = (dc * g * i * (1.0 - i)).matrix();
      dz.segment(H, H) = (dc * s.c_prev.array() * f * (1.0 - f)).matrix();
      dz.segment(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
      dz.segment(3 * H, H) = (d_out * o * (1.0 - o)).matrix();
      dc_next = (dc * f).matrix();

      params.lstm_wx.grad.noalias() += inputs.row(t).transpose() * dz.transpose();
      params.lstm_wh.grad.noalias() += s.h_prev * dz.transpose();
      params.lstm_b.grad += dz.transpose();
      dh_next.noalias() = params.lstm_wh.value * dz;
      if (grad_inputs != nullptr) {
        grad_inputs->row(t).noalias() += (params.lstm_wx.value * dz).transpose();
      }
    }
  } else {
    for (Eigen::Index t = 0; t < T; ++t) {
      const StepCache& s = trace.steps[t];
      const Vector d_pre2 = (grad_h.row(t).transpose().array() * (1.0 - s.h.array().square())).matrix();
      params.ff2_w.grad.noalias() += s.ff_hidden * d_pre2.transpose();
      params.ff2_b.grad += d_pre2.transpose();
      const Vector d_hidden = params.ff2_w.value * d_pre2;
      const Vector d_pre1 = (d_hidden.array() * (s.ff_pre.array() > 0.0).cast<double>()).matrix();
      params.ff1_w.grad.noalias() += inputs.row(t).transpose() * d_pre1.transpose();
      params.ff1_b.grad += d_pre1.transpose();
      if (grad_inputs != nullptr) {
        grad_inputs->row(t).noalias() += (params.ff1_w.value * d_pre1).transpose();
      }
    }
  }
}

double frame_loss(const Matrix& action_prob, std::span<const int> labels, Matrix* grad_logits) {
  const Eigen::Index N = action_prob.rows();
  if (static_cast<Eigen::Index>(labels.size()) != N) {
    throw std::domain_error("frame_loss: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(N) + " frames");
  }
  if (grad_logits != nullptr) *grad_logits = action_prob / static_cast<double>(std::max<Eigen::Index>(N, 1));
  if (N == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index j = 0; j < N; ++j) {
    const int label = labels[j];
    if (label < 0 || label >= action_prob.cols()) {
      throw std::domain_error("frame_loss: label out of range at frame " + std::to_string(j));
    }
    total -= std::log(std::max(action_prob(j, label), kProbabilityFloor));
    if (grad_logits != nullptr) (*grad_logits)(j, label) -= 1.0 / static_cast<double>(N);
  }
  return total / static_cast<double>(N);
}

std::vector<std::uint8_t> select_start_frames(std::span<const std::uint8_t> starts,
                                              int negative_ratio, Rng& rng) {
  std::vector<std::uint8_t> selected(starts.size(), 0);
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (starts[j] != 0) {
      selected[j] = 1;
      ++positives;
    } else {
      negatives.push_back(j);
    }
  }
  std::size_t want = positives == 0 ? 1 : positives * static_cast<std::size_t>(negative_ratio);
  want = std::min(want, negatives.size());
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(negatives.size() - k));
    std::swap(negatives[k], negatives[pick]);
    selected[negatives[k]] = 1;
  }
  return selected;
}

double start_loss(const Matrix& start_prob, std::span<const std::uint8_t> starts,
                  std::span<const std::uint8_t> selected, double gamma,
                  StartNormalization normalization, Matrix* grad_logits) {
  const Eigen::Index N = start_prob.rows();
  if (static_cast<Eigen::Index>(starts.size()) != N ||
      static_cast<Eigen::Index>(selected.size()) != N) {
    throw std::domain_error("start_loss: label/selection length does not match frame count");
  }
  if (grad_logits != nullptr) grad_logits->setZero(N, 2);

  std::size_t count = 0;
  for (std::uint8_t s : selected) count += s != 0;
  const double divisor =
      normalization == StartNormalization::Selected ? static_cast<double>(count) : static_cast<double>(N);
  if (divisor == 0.0) return 0.0;

  double total = 0.0;
  for (Eigen::Index j = 0; j < N; ++j) {
    if (selected[j] == 0) continue;
    const int m = starts[j] != 0 ? 1 : 0;
    const double p = start_prob(j, m);
    const double p_log = std::max(p, kProbabilityFloor);
    const double weight = gamma == 0.0 ? 1.0 : std::pow(1.0 - p, gamma);
    total -= weight * std::log(p_log);

    if (grad_logits != nullptr) {
      double d_p = 0.0;
      if (gamma != 0.0 && p < 1.0) d_p += gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p_log);
      if (p >= kProbabilityFloor) d_p -= weight / p;
      for (int k = 0; k < 2; ++k) {
        const double dp_dz = p * ((k == m ? 1.0 : 0.0) - start_prob(j, k));
        (*grad_logits)(j, k) += d_p * dp_dz / divisor;
      }
    }
  }
  return total / divisor;
}

double start_loss(const Matrix& start_prob, std::span<const std::uint8_t> starts,
                  const StartLossOptions& options, Rng& rng, Matrix* grad_logits) {
  const auto selected = select_start_frames(starts, options.negative_ratio, rng);
  return start_loss(start_prob, starts, selected, options.gamma, options.normalization, grad_logits);
}

}  // namespace woad::oar
