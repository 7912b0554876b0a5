// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/pipeline.hpp"

namespace woad {

std::vector<DetectionLog> infer_corpus(const Model& model, const Corpus& corpus, const StreamOptions& options) {
  std::vector<DetectionLog> logs;
  logs.reserve(corpus.videos.size());
  for (const Video& v : corpus.videos) {
    StreamSession session(model, v.fps, options);
    logs.push_back(run_stream(session, v.raw, v.id));
  }
  return logs;
}

std::vector<double> class_prior(const Corpus& corpus) {
  std::vector<double> counts(static_cast<std::size_t>(corpus.classes) + 1, 0.0);
  double total = 0.0;
  for (const Video& v : corpus.videos) {
    if (!v.ground_truth) continue;
    for (int label : v.ground_truth->frame_labels) {
      counts[static_cast<std::size_t>(label)] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) {
    counts.assign(counts.size(), 0.0);
    counts[0] = 1.0;
    return counts;
  }
  for (double& c : counts) c /= total;
  return counts;
}

std::vector<DetectionLog> baseline_logs(const Corpus& corpus, const std::vector<double>& prior) {
  const auto width = static_cast<Eigen::Index>(prior.size());
  const Eigen::Map<const Eigen::RowVectorXd> row(prior.data(), width);
  std::vector<DetectionLog> logs;
  for (const Video& v : corpus.videos) {
    DetectionLog log;
    log.video_id = v.id;
    log.fps = v.fps;
    const Eigen::Index T = v.length();
    log.action_prob = row.replicate(T, 1);
    log.start_prob = Matrix(T, 2);
    log.start_prob.col(0).setOnes();
    log.start_prob.col(1).setZero();
    log.combined = log.action_prob;
    log.combined.rightCols(width - 1).setZero();
    log.predicted.assign(static_cast<std::size_t>(T), 0);
    log.event_flags.assign(static_cast<std::size_t>(T), 0);
    logs.push_back(std::move(log));
  }
  return logs;
}

}  // namespace woad
