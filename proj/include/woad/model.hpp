// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>

#include "woad/oar.hpp"
#include "woad/random.hpp"
#include "woad/trunk.hpp"

namespace woad {

struct ModelShape {
  int input_dim = 0;
  /// Trunk output width D; 0 means "same as input_dim".
  int feature_dim = 0;
  int hidden = 64;
  int classes = 0;
  int window = 3;
  bool recurrent = true;

  int trunk_width() const { return feature_dim > 0 ? feature_dim : input_dim; }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Shared trunk, proposal-generator projection and recognizer.
struct Model {
  ModelShape shape;
  TrunkParams trunk;
  Parameter tpg_weight;  // D x C
  oar::OarParams oar;

  Model() = default;
  explicit Model(const ModelShape& shape);

  void initialize(Rng& rng);

  /// Fixed order: trunk, tpg, recognizer.
  ParameterList parameters();
  std::vector<const Parameter*> parameters() const;
};

/// FNV-1a over every parameter's name, shape and bytes.
std::uint64_t parameter_hash(const Model& model);

}  // namespace woad
