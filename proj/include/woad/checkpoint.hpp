// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "woad/errors.hpp"
#include "woad/labels.hpp"
#include "woad/model.hpp"

namespace woad {

/// Model parameters plus the provenance needed to resume or audit a run.
struct Checkpoint {
  Model model;
  std::uint64_t config_hash = 0;
  /// -1 for an untrained model.
  int epoch = -1;
  std::string rng_state;
};

/// "WOADCK", u32 version, u64 config hash, i32 epoch, rng state string, model
/// shape, then every parameter as (name, rows, cols, float64 values). Strings
/// are u32-length-prefixed; everything little-endian.
inline constexpr char kCheckpointMagic[] = "WOADCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<checkpoint>");
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the serialized bytes.
std::uint64_t checkpoint_hash(const Checkpoint& ckpt);

/// Tab-separated label snapshot: video_id, provenance, frame labels (comma
/// list), start bits (0/1 string). One line per video.
void write_label_snapshot(std::ostream& out, const std::vector<std::string>& video_ids,
                          const std::vector<LabelTrack>& tracks);

}  // namespace woad
