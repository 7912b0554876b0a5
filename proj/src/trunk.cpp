// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/trunk.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace woad {

TrunkParams::TrunkParams(int input_dim, int output_dim)
    : weight("trunk.weight", input_dim, output_dim), bias("trunk.bias", 1, output_dim) {
  if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("TrunkParams: empty shape");
}

void TrunkParams::initialize(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim()));
  auto flat = weight.value.reshaped<Eigen::RowMajor>();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.uniform(-bound, bound);
  bias.value.setZero();
}

Matrix trunk_forward(const Matrix& raw, const TrunkParams& trunk) {
  if (raw.cols() != trunk.input_dim()) {
    throw std::domain_error("trunk_forward: input dimension " + std::to_string(raw.cols()) +
                            ", expected " + std::to_string(trunk.input_dim()));
  }
  Matrix out = raw * trunk.weight.value;
  out.rowwise() += trunk.bias.value.row(0);
  return out.cwiseMax(0.0);
}

void trunk_forward_frame(const Eigen::Ref<const Vector>& raw, const TrunkParams& trunk, Vector& out) {
  if (raw.size() != trunk.input_dim()) {
    throw std::domain_error("trunk_forward: input dimension " + std::to_string(raw.size()) +
                            ", expected " + std::to_string(trunk.input_dim()));
  }
  out.noalias() = trunk.weight.value.transpose() * raw;
  out += trunk.bias.value.transpose();
  out = out.cwiseMax(0.0);
}

void trunk_backward(const Matrix& raw, const Matrix& output, const Matrix& grad_output,
                    TrunkParams& trunk) {
  const Matrix grad_pre = grad_output.cwiseProduct((output.array() > 0.0).cast<double>().matrix());
  trunk.weight.grad.noalias() += raw.transpose() * grad_pre;
  trunk.bias.grad += grad_pre.colwise().sum();
}

}  // namespace woad
