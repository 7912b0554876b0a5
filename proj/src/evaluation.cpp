// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace woad::eval {

namespace {

// Seconds-to-frame conversion tolerates the rounding of t / fps * fps.
constexpr double kFrameEpsilon = 1e-6;

const VideoGroundTruth* find_truth(std::span<const VideoGroundTruth> truth, const std::string& id) {
  for (const VideoGroundTruth& v : truth) {
    if (v.video_id == id) return &v;
  }
  return nullptr;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::pair<int, int> segment_frames(const Segment& segment, double fps, int num_frames) {
  const int first = std::max(0, static_cast<int>(std::ceil(segment.start_s * fps - kFrameEpsilon)));
  const int end = std::min(num_frames, static_cast<int>(std::ceil(segment.end_s * fps - kFrameEpsilon)));
  return {first, end - 1};
}

double average_precision(std::span<const RankedHit> ranked, std::size_t num_positives,
                         ApMode mode) {
  if (num_positives == 0) return 0.0;
  const double npos = static_cast<double>(num_positives);
  std::vector<std::pair<double, double>> curve;  // recall, precision at each threshold
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < ranked.size();) {
    std::size_t j = i;
    while (j < ranked.size() && ranked[j].confidence == ranked[i].confidence) {
      ranked[j].positive ? ++tp : ++fp;
      ++j;
    }
    curve.emplace_back(static_cast<double>(tp) / npos,
                       static_cast<double>(tp) / static_cast<double>(tp + fp));
    i = j;
  }

  if (mode == ApMode::Uninterpolated) {
    double ap = 0.0, prev_recall = 0.0;
    for (auto [recall, precision] : curve) {
      ap += (recall - prev_recall) * precision;
      prev_recall = recall;
    }
    return ap;
  }
  double ap = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double r = k / 10.0;
    double best = 0.0;
    for (auto [recall, precision] : curve) {
      if (recall >= r - 1e-12) best = std::max(best, precision);
    }
    ap += best;
  }
  return ap / 11.0;
}

std::optional<double> frame_ap(int cls, std::span<const DetectionLog> logs,
                               std::span<const VideoGroundTruth> truth, ApMode mode) {
  struct Item {
    double confidence;
    const std::string* video;
    int frame;
    bool positive;
  };
  std::vector<Item> items;
  std::size_t positives = 0;
  for (const DetectionLog& log : logs) {
    if (cls < 1 || cls >= log.action_prob.cols()) {
      throw std::domain_error("frame_ap: class " + std::to_string(cls) + " outside log");
    }
    const VideoGroundTruth* gt = find_truth(truth, log.video_id);
    if (gt == nullptr) throw std::invalid_argument("frame_ap: no ground truth for '" + log.video_id + "'");
    std::vector<std::uint8_t> positive(static_cast<std::size_t>(log.length()), 0);
    for (const Segment& s : gt->segments) {
      if (s.cls != cls) continue;
      const auto [first, last] = segment_frames(s, gt->fps, log.length());
      for (int t = first; t <= last; ++t) positive[t] = 1;
    }
    for (int t = 0; t < log.length(); ++t) {
      items.push_back({log.action_prob(t, cls), &log.video_id, t, positive[t] != 0});
      positives += positive[t];
    }
  }
  if (positives == 0) return std::nullopt;

  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (*a.video != *b.video) return *a.video < *b.video;
    return a.frame < b.frame;
  });
  std::vector<RankedHit> ranked;
  ranked.reserve(items.size());
  for (const Item& it : items) ranked.push_back({it.confidence, it.positive});
  return average_precision(ranked, positives, mode);
}

std::optional<double> point_ap(int cls, std::span<const PredictedStart> predictions,
                               std::span<const TruthStart> truth, double threshold_s,
                               ApMode mode) {
  std::vector<const TruthStart*> gts;
  for (const TruthStart& g : truth) {
    if (g.cls == cls) gts.push_back(&g);
  }
  if (gts.empty()) return std::nullopt;

  std::vector<const PredictedStart*> preds;
  for (const PredictedStart& p : predictions) {
    if (p.cls == cls) preds.push_back(&p);
  }
  std::sort(preds.begin(), preds.end(), [](const PredictedStart* a, const PredictedStart* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    if (a->video_id != b->video_id) return a->video_id < b->video_id;
    return a->time_s < b->time_s;
  });

  std::vector<std::uint8_t> matched(gts.size(), 0);
  std::vector<RankedHit> ranked;
  ranked.reserve(preds.size());
  for (const PredictedStart* p : preds) {
    std::size_t best = gts.size();
    double best_distance = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] != 0 || gts[g]->video_id != p->video_id) continue;
      const double distance = std::abs(p->time_s - gts[g]->time_s);
      if (distance > threshold_s) continue;
      if (best == gts.size() || distance < best_distance) {
        best = g;
        best_distance = distance;
      }
    }
    if (best != gts.size()) matched[best] = 1;
    ranked.push_back({p->confidence, best != gts.size()});
  }
  return average_precision(ranked, gts.size(), mode);
}

double mean_ap(std::span<const std::optional<double>> per_class) {
  double sum = 0.0;
  int count = 0;
  for (const auto& ap : per_class) {
    if (ap) {
      sum += *ap;
      ++count;
    }
  }
  if (count == 0) throw std::domain_error("mean_ap: no class with a defined AP");
  return sum / count;
}

std::vector<PredictedStart> collect_starts(std::span<const DetectionLog> logs) {
  std::vector<PredictedStart> out;
  for (const DetectionLog& log : logs) {
    for (const StartEvent& e : log.events) out.push_back({log.video_id, e.cls, e.time_s, e.confidence});
  }
  return out;
}

std::vector<TruthStart> collect_starts(std::span<const VideoGroundTruth> truth) {
  std::vector<TruthStart> out;
  for (const VideoGroundTruth& v : truth) {
    for (const Segment& s : v.segments) out.push_back({v.video_id, s.cls, s.start_s});
  }
  return out;
}

std::vector<double> default_time_thresholds() {
  return {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
}

EvalReport evaluate(std::span<const DetectionLog> logs, std::span<const VideoGroundTruth> truth,
                    int classes, std::span<const double> thresholds, ApMode mode) {
  EvalReport report;
  report.classes = classes;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  for (int c = 1; c <= classes; ++c) report.frame_ap.push_back(frame_ap(c, logs, truth, mode));
  report.mean_frame_ap = mean_ap(report.frame_ap);

  const auto predicted = collect_starts(logs);
  const auto truth_starts = collect_starts(truth);
  for (double threshold : thresholds) {
    std::vector<std::optional<double>> row;
    for (int c = 1; c <= classes; ++c) {
      row.push_back(point_ap(c, predicted, truth_starts, threshold, mode));
    }
    report.mean_point_ap.push_back(mean_ap(row));
    report.point_ap.push_back(std::move(row));
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  auto cell = [](const std::string& s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%10s", s.c_str());
    return std::string(buf);
  };
  out += cell("class");
  for (double t : report.thresholds) {
    char label[32];
    std::snprintf(label, sizeof(label), "P-AP@%g", t);
    out += cell(label);
  }
  out += cell("F-AP") + "\n";
  for (int c = 1; c <= report.classes; ++c) {
    out += cell(std::to_string(c));
    for (const auto& row : report.point_ap) out += cell(row[c - 1] ? fmt(*row[c - 1]) : "n/a");
    out += cell(report.frame_ap[c - 1] ? fmt(*report.frame_ap[c - 1]) : "n/a") + "\n";
  }
  out += cell("mean");
  for (double v : report.mean_point_ap) out += cell(fmt(v));
  out += cell(fmt(report.mean_frame_ap)) + "\n";

  char buf[96];
  for (std::size_t k = 0; k < report.thresholds.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "mean_p_ap@%g=%.9g\n", report.thresholds[k], report.mean_point_ap[k]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "mean_f_ap=%.9g\n", report.mean_frame_ap);
  out += buf;
  return out;
}

}  // namespace woad::eval
