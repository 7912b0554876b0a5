// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/labels.hpp"

#include <stdexcept>

#include "woad/hash.hpp"

namespace woad {

LabelTrack LabelTrack::background(int length, Provenance provenance) {
  LabelTrack track;
  track.frame_labels.assign(static_cast<std::size_t>(length), 0);
  track.start_bits.assign(static_cast<std::size_t>(length), 0);
  track.provenance = provenance;
  return track;
}

LabelTrack segments_to_labels(std::span<const FrameSegment> segments, int length,
                              Provenance provenance) {
  LabelTrack track = LabelTrack::background(length, provenance);
  std::vector<std::uint8_t> painted(static_cast<std::size_t>(length), 0);
  for (const FrameSegment& s : segments) {
    if (s.first < 0 || s.last < s.first || s.last >= length || s.cls < 1) {
      throw std::domain_error("segments_to_labels: segment outside [0, length) or invalid class");
    }
    for (int t = s.first; t <= s.last; ++t) {
      if (painted[t] == 0) {
        track.frame_labels[t] = s.cls;
        painted[t] = 1;
      }
    }
  }
  for (const FrameSegment& s : segments) {
    if (track.frame_labels[s.first] != 0) track.start_bits[s.first] = 1;
  }
  return track;
}

std::uint64_t track_hash(const LabelTrack& track) {
  Fnv1a h;
  for (int v : track.frame_labels) h.add(v);
  for (std::uint8_t b : track.start_bits) h.add(b);
  h.add(static_cast<std::uint8_t>(track.provenance));
  return h.value();
}

}  // namespace woad
