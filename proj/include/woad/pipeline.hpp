// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include "woad/evaluation.hpp"
#include "woad/model.hpp"
#include "woad/streaming.hpp"
#include "woad/training.hpp"

namespace woad {

/// Streams every video of `corpus` through a fresh session.
std::vector<DetectionLog> infer_corpus(const Model& model, const Corpus& corpus, const StreamOptions& options);

/// Always-background reference: every frame carries the same class-prior
/// probabilities and no start ever fires.
std::vector<DetectionLog> baseline_logs(const Corpus& corpus, const std::vector<double>& prior);

/// Class prior (index 0 = background) from a corpus's ground-truth tracks.
std::vector<double> class_prior(const Corpus& corpus);

}  // namespace woad
