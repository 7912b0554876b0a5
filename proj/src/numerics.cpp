// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/numerics.hpp"

#include <cmath>

namespace woad {

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

void Adam::step(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) throw NonFiniteGradient(p->name);
  }
  if (first_.empty()) {
    first_.reserve(params.size());
    second_.reserve(params.size());
    for (const Parameter* p : params) {
      first_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (first_.size() != params.size()) {
    throw std::invalid_argument("Adam::step: parameter list changed between steps");
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double correction1 = 1.0 - std::pow(options_.beta1, t);
  const double correction2 = 1.0 - std::pow(options_.beta2, t);
  const bool coupled = options_.decay_mode == WeightDecayMode::Coupled;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix g = p.grad;
    if (coupled && options_.weight_decay != 0.0) g += options_.weight_decay * p.value;

    first_[i] = options_.beta1 * first_[i] + (1.0 - options_.beta1) * g;
    second_[i] = options_.beta2 * second_[i] + (1.0 - options_.beta2) * g.cwiseProduct(g);

    const auto m_hat = first_[i].array() / correction1;
    const auto v_hat = second_[i].array() / correction2;
    if (!coupled && options_.weight_decay != 0.0) {
      p.value *= 1.0 - options_.learning_rate * options_.weight_decay;
    }
    p.value.array() -= options_.learning_rate * m_hat / (v_hat.sqrt() + options_.epsilon);
  }
}

GradCheckResult grad_check(const LossFunction& loss, std::span<Parameter* const> params,
                           double step) {
  zero_grads(params);
  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  const double base_a = loss(false);
  const double base_b = loss(false);
  if (base_a != base_b) {
    throw std::runtime_error("grad_check: loss function is not deterministic");
  }

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    auto values = p.value.reshaped<Eigen::RowMajor>();
    const auto grads = analytic[k].reshaped<Eigen::RowMajor>();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const double saved = values(i);
      values(i) = saved + step;
      const double plus = loss(false);
      values(i) = saved - step;
      const double minus = loss(false);
      values(i) = saved;

      const double numeric = (plus - minus) / (2.0 * step);
      const double a = grads(i);
      const double err = std::abs(a - numeric) / std::max(kGradCheckFloor, std::abs(a) + std::abs(numeric));
      if (result.worst_index < 0 || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace woad
