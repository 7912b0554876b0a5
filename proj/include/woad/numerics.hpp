// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace woad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Training and evaluation precision. 32-bit appears only at feature ingestion.
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Floor applied to probabilities before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Max-subtracted softmax over all entries of `logits`.
template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) {
    throw std::domain_error("softmax: empty input");
  }
  VectorX<Scalar> out = logits.reshaped();
  const Scalar peak = out.maxCoeff();
  out = (out.array() - peak).exp();
  out /= out.sum();
  return out;
}

/// In-place softmax of a dense vector; no allocation.
template <typename Scalar>
void softmax_in_place(VectorX<Scalar>& v) {
  if (v.size() == 0) throw std::domain_error("softmax: empty input");
  const Scalar peak = v.maxCoeff();
  v = (v.array() - peak).exp();
  v /= v.sum();
}

/// Softmax along the time axis of one class column.
template <typename Derived>
VectorX<typename Derived::Scalar> temporal_softmax(const Eigen::MatrixBase<Derived>& scores) {
  return softmax(scores);
}

/// Gradient of a softmax w.r.t. its logits given the gradient w.r.t. its output.
template <typename DerivedP, typename DerivedG>
VectorX<typename DerivedP::Scalar> softmax_backward(const Eigen::MatrixBase<DerivedP>& probs,
                                                    const Eigen::MatrixBase<DerivedG>& grad_probs) {
  const auto dot = probs.reshaped().dot(grad_probs.reshaped());
  return (probs.reshaped().array() * (grad_probs.reshaped().array() - dot)).matrix();
}

/// Cosine similarity clamped to [-1, 1]. A zero-norm operand yields 0 and sets
/// `degenerate` when provided.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedX>& x,
                                            const Eigen::MatrixBase<DerivedY>& y,
                                            bool* degenerate = nullptr) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) {
    throw std::domain_error("cosine_similarity: length mismatch");
  }
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (degenerate != nullptr) *degenerate = false;
  if (nx == Scalar(0) || ny == Scalar(0)) {
    if (degenerate != nullptr) *degenerate = true;
    return Scalar(0);
  }
  const Scalar d = x.reshaped().dot(y.reshaped()) / (nx * ny);
  return std::clamp(d, Scalar(-1), Scalar(1));
}

/// Partial derivatives of cosine_similarity w.r.t. each operand. Zero where the
/// forward value was degenerate or clamped.
template <typename Scalar>
void cosine_similarity_backward(const VectorX<Scalar>& x, const VectorX<Scalar>& y, Scalar upstream,
                                VectorX<Scalar>& grad_x, VectorX<Scalar>& grad_y) {
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (nx == Scalar(0) || ny == Scalar(0)) return;
  const Scalar d = x.dot(y) / (nx * ny);
  if (d > Scalar(1) || d < Scalar(-1)) return;
  grad_x += upstream * (y / (nx * ny) - d * x / (nx * nx));
  grad_y += upstream * (x / (nx * ny) - d * y / (ny * ny));
}

/// -sum target * ln(max(predicted, floor)).
template <typename DerivedT, typename DerivedP>
typename DerivedT::Scalar cross_entropy(const Eigen::MatrixBase<DerivedT>& target,
                                        const Eigen::MatrixBase<DerivedP>& predicted) {
  using Scalar = typename DerivedT::Scalar;
  if (target.size() != predicted.size()) {
    throw std::domain_error("cross_entropy: length mismatch");
  }
  Scalar loss = 0;
  const auto t = target.reshaped();
  const auto p = predicted.reshaped();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t(i) != Scalar(0)) {
      loss -= t(i) * std::log(std::max(p(i), Scalar(kProbabilityFloor)));
    }
  }
  return loss;
}

/// A named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  bool empty() const { return value.size() == 0; }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(std::span<Parameter* const> params);

enum class WeightDecayMode { Coupled, Decoupled };

struct AdamOptions {
  double learning_rate = 1e-4;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  WeightDecayMode decay_mode = WeightDecayMode::Coupled;
};

/// Thrown when a gradient contains NaN or Inf; no parameter has been modified.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter '" + param + "'"), parameter(param) {}
  std::string parameter;
};

/// Bias-corrected Adam. Moments are keyed by position in the parameter list
/// handed to step(); the list must keep the same order and shapes.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::span<Parameter* const> params);

  std::int64_t steps() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  const Matrix& first_moment(std::size_t i) const { return first_[i]; }
  const Matrix& second_moment(std::size_t i) const { return second_[i]; }

 private:
  AdamOptions options_;
  std::int64_t step_count_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Loss callback for grad_check. When `accumulate` is true it must add the
/// analytic gradient into each parameter's `grad`.
using LossFunction = std::function<double(bool accumulate)>;

/// Denominator floor of the relative error. Below it the central difference
/// is dominated by rounding, so errors are measured absolutely.
inline constexpr double kGradCheckFloor = 1e-6;

/// Central finite differences over every coordinate of `params` against the
/// analytic gradient. Relative error is |a - n| / max(floor, |a| + |n|).
GradCheckResult grad_check(const LossFunction& loss, std::span<Parameter* const> params,
                           double step = 1e-5);

}  // namespace woad
