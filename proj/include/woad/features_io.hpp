// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "woad/errors.hpp"
#include "woad/numerics.hpp"

namespace woad {

/// One video's T x D feature matrix plus identity and chunk rate.
struct FeatureSequence {
  std::string video_id;
  double fps = 1.0;
  Matrix features;

  int length() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// "WOADF1", u32 T, u32 D, then T * D float32, all little-endian, row-major.
inline constexpr char kFeatureMagic[] = "WOADF1";
inline constexpr std::size_t kFeatureHeaderBytes = 14;

void write_features(std::ostream& out, const MatrixX<float>& features);
void write_features(const std::filesystem::path& path, const MatrixX<float>& features);

/// Raw float32 payload exactly as stored.
MatrixX<float> read_features_f32(std::istream& in, const std::string& source = "<stream>");

/// Widened to 64-bit.
FeatureSequence load_features(const std::filesystem::path& path, std::string video_id = {},
                              double fps = 1.0);

}  // namespace woad
