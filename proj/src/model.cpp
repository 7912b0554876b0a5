// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/model.hpp"

#include <cmath>

#include "woad/hash.hpp"

namespace woad {

Model::Model(const ModelShape& s)
    : shape(s),
      trunk(s.input_dim, s.trunk_width()),
      tpg_weight("tpg.weight", s.trunk_width(), s.classes),
      oar(oar::OarShape{s.trunk_width(), s.hidden, s.classes, s.window, s.recurrent}) {}

void Model::initialize(Rng& rng) {
  trunk.initialize(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.trunk_width()));
  auto flat = tpg_weight.value.reshaped<Eigen::RowMajor>();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.uniform(-bound, bound);
  oar.initialize(rng);
}

ParameterList Model::parameters() {
  ParameterList out = trunk.parameters();
  out.push_back(&tpg_weight);
  for (Parameter* p : oar.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  auto& self = const_cast<Model&>(*this);
  const ParameterList mutable_list = self.parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

std::uint64_t parameter_hash(const Model& model) {
  Fnv1a h;
  for (const Parameter* p : model.parameters()) {
    h.add(std::string_view(p->name));
    h.add(static_cast<std::int64_t>(p->value.rows()));
    h.add(static_cast<std::int64_t>(p->value.cols()));
    h.bytes(p->value.data(), sizeof(double) * static_cast<std::size_t>(p->value.size()));
  }
  return h.value();
}

}  // namespace woad
