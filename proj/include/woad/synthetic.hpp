// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "woad/manifest.hpp"
#include "woad/numerics.hpp"
#include "woad/training.hpp"

namespace woad {

/// Parameters of the desk-scale verification corpus.
struct SyntheticSpec {
  int classes = 4;
  int dim = 16;
  int train_per_class = 12;
  int test_per_class = 6;
  int min_length = 40;
  int max_length = 120;
  /// Fraction of each video covered by action frames.
  double action_ratio = 0.2;
  /// Euclidean distance between any two class prototypes.
  double margin = 2.0;
  /// Per-coordinate standard deviation of the additive noise.
  double noise = 0.5;
  /// 25 fps video cut into 16-frame chunks.
  double fps = 1.5625;
  int max_instances = 3;
  std::uint64_t seed = 7;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct SyntheticCorpus {
  SyntheticSpec spec;
  CorpusManifest manifest;
  /// One T x D matrix per manifest entry, same order.
  std::vector<MatrixX<float>> features;
  /// Row 0 is background, row c is class c.
  Matrix prototypes;
  std::vector<std::string> warnings;
};

/// Background frames sit near the background prototype and action frames near
/// their class prototype, plus isotropic Gaussian noise. Every video holds one
/// class with 1..max_instances non-adjacent instances. Byte-identical per seed.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Writes `manifest.tsv` and `features/<video_id>.woadf` under `dir`.
/// Returns the manifest path.
std::filesystem::path write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

/// The in-memory equivalent of load_corpus on the written files.
Corpus synthetic_corpus(const SyntheticCorpus& corpus, Split split);

/// FNV-1a over the manifest text and every feature byte.
std::uint64_t synthetic_hash(const SyntheticCorpus& corpus);

}  // namespace woad
