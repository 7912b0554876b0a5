// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "woad/errors.hpp"
#include "woad/evaluation.hpp"
#include "woad/training.hpp"

namespace woad {

enum class Split { Train, Test };

struct ManifestEntry {
  std::string video_id;
  Split split = Split::Train;
  double frame_rate = 1.0;
  int num_frames = 0;
  std::string feature_path;
  std::vector<int> classes;
  /// Absent when the video carries only video-level labels.
  std::optional<std::vector<eval::Segment>> segments;
};

/// Tab-separated manifest:
///
///   #woad-manifest<TAB>1
///   #classes<TAB>name_1<TAB>...<TAB>name_C
///   video_id  split  frame_rate  num_frames  feature_path  classes  segments
///   one row per video
///
/// `classes` is a comma list of 1-based indices; `segments` is "-" or a ';'
/// list of cls:start_s-end_s. Feature paths are relative to the manifest.
struct CorpusManifest {
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  int classes() const { return static_cast<int>(class_names.size()); }
};

CorpusManifest parse_manifest(std::istream& in, const std::string& source = "<manifest>");
CorpusManifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const CorpusManifest& manifest);
void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

/// Throws ParseError (line locus) if a feature file is missing or its frame
/// count disagrees with the manifest.
void check_feature_files(const CorpusManifest& manifest, const std::string& source = "<manifest>");

/// Loads features for one split; annotated videos get a ground-truth track.
Corpus load_corpus(const CorpusManifest& manifest, Split split);

std::vector<eval::VideoGroundTruth> ground_truth(const CorpusManifest& manifest, Split split);

/// Ground-truth label track from seconds-based segments.
LabelTrack segments_to_track(const std::vector<eval::Segment>& segments, double fps, int num_frames);

}  // namespace woad
