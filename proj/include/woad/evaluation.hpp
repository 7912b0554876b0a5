// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "woad/streaming.hpp"

// Frame-based and point-based average precision.
namespace woad::eval {

struct Segment {
  int cls = 0;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct VideoGroundTruth {
  std::string video_id;
  double fps = 1.0;
  int num_frames = 0;
  std::vector<Segment> segments;
};

/// Frames [first, last] whose timestamp t / fps lies in [start_s, end_s).
/// `last < first` when the segment covers no frame.
std::pair<int, int> segment_frames(const Segment& segment, double fps, int num_frames);

enum class ApMode {
  /// Precision summed at every recall step, ties scored as one threshold.
  Uninterpolated,
  /// Mean of max precision at recall >= 0, 0.1, ..., 1.
  ElevenPoint,
};

/// One ranked prediction: its confidence and whether it was matched.
struct RankedHit {
  double confidence = 0.0;
  bool positive = false;
};

/// AP of a list already sorted by descending confidence. Entries with equal
/// confidence form one threshold. Returns 0 when there are no positives.
double average_precision(std::span<const RankedHit> ranked, std::size_t num_positives,
                         ApMode mode = ApMode::Uninterpolated);

/// Per-frame AP of class `cls` over the action probabilities in `logs`.
/// std::nullopt when the class has no positive frame.
std::optional<double> frame_ap(int cls, std::span<const DetectionLog> logs,
                               std::span<const VideoGroundTruth> truth,
                               ApMode mode = ApMode::Uninterpolated);

struct PredictedStart {
  std::string video_id;
  int cls = 0;
  double time_s = 0.0;
  double confidence = 0.0;
};

struct TruthStart {
  std::string video_id;
  int cls = 0;
  double time_s = 0.0;
};

/// Start-point AP of class `cls`: predictions are matched greedily in
/// confidence order to the nearest unmatched same-video start within
/// `threshold_s`. std::nullopt when the class has no ground-truth start.
std::optional<double> point_ap(int cls, std::span<const PredictedStart> predictions,
                               std::span<const TruthStart> truth, double threshold_s,
                               ApMode mode = ApMode::Uninterpolated);

/// Arithmetic mean over defined entries; throws when none is defined.
double mean_ap(std::span<const std::optional<double>> per_class);

std::vector<PredictedStart> collect_starts(std::span<const DetectionLog> logs);
std::vector<TruthStart> collect_starts(std::span<const VideoGroundTruth> truth);

struct EvalReport {
  int classes = 0;
  std::vector<std::optional<double>> frame_ap;  // index cls - 1
  double mean_frame_ap = 0.0;
  std::vector<double> thresholds;
  /// [threshold][cls - 1]
  std::vector<std::vector<std::optional<double>>> point_ap;
  std::vector<double> mean_point_ap;
};

std::vector<double> default_time_thresholds();

EvalReport evaluate(std::span<const DetectionLog> logs, std::span<const VideoGroundTruth> truth,
                    int classes, std::span<const double> thresholds,
                    ApMode mode = ApMode::Uninterpolated);

/// Aligned table followed by key=value lines.
std::string format_report(const EvalReport& report);

}  // namespace woad::eval
