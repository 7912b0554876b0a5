// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "woad/numerics.hpp"

namespace woad {

struct GradientCheck {
  std::string loss;
  int trial = 0;
  GradCheckResult result;
};

struct GradientSuiteOptions {
  std::uint64_t seed = 1;
  int trials = 3;
  /// Instance bounds: frames, hidden units, classes.
  int max_frames = 16;
  int max_hidden = 8;
  int max_classes = 4;
  double step = 1e-5;
};

/// Finite-difference checks of every training loss on randomized small
/// instances: mil, cas, frame, start, total (trunk, both branches and all
/// recognizer variants), one entry per loss and trial.
std::vector<GradientCheck> run_gradient_suite(const GradientSuiteOptions& options = {});

}  // namespace woad
