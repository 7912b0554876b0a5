// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace woad {

enum class Provenance : std::uint8_t { GroundTruth, Pseudo };

/// Per-frame supervision over C+1 classes (0 = background) and binary start bits.
struct LabelTrack {
  std::vector<int> frame_labels;
  std::vector<std::uint8_t> start_bits;
  Provenance provenance = Provenance::Pseudo;

  int length() const { return static_cast<int>(frame_labels.size()); }
  static LabelTrack background(int length, Provenance provenance);

  friend bool operator==(const LabelTrack&, const LabelTrack&) = default;
};

/// Closed frame interval [first, last] of one class.
struct FrameSegment {
  int cls = 0;
  int first = 0;
  int last = 0;
};

/// Paints segments onto a background track; earlier segments win on overlap.
/// Start bits mark each segment's first frame.
LabelTrack segments_to_labels(std::span<const FrameSegment> segments, int length,
                              Provenance provenance);

/// FNV-1a over labels and starts; used to assert immutability between refreshes.
std::uint64_t track_hash(const LabelTrack& track);

}  // namespace woad
