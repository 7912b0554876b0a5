// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include "woad/numerics.hpp"
#include "woad/random.hpp"

namespace woad {

/// Shared fully connected layer with a rectifier, feeding both the proposal
/// generator and the recognizer.
struct TrunkParams {
  Parameter weight;  // D_in x D
  Parameter bias;    // 1 x D

  TrunkParams() = default;
  TrunkParams(int input_dim, int output_dim);

  int input_dim() const { return static_cast<int>(weight.value.rows()); }
  int output_dim() const { return static_cast<int>(weight.value.cols()); }

  void initialize(Rng& rng);
  ParameterList parameters() { return {&weight, &bias}; }
};

/// max(0, raw W + b), one row per frame.
Matrix trunk_forward(const Matrix& raw, const TrunkParams& trunk);

/// Single-frame trunk into a preallocated output.
void trunk_forward_frame(const Eigen::Ref<const Vector>& raw, const TrunkParams& trunk, Vector& out);

/// Accumulates parameter gradients given dL/d(output). The rectifier's
/// subgradient at exactly zero is 0.
void trunk_backward(const Matrix& raw, const Matrix& output, const Matrix& grad_output,
                    TrunkParams& trunk);

}  // namespace woad
