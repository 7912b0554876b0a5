// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/tpg.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace woad::tpg {

namespace {

// Indices of the k largest entries of `column`, ties broken by earlier index.
std::vector<Eigen::Index> top_k_indices(const Eigen::Ref<const Vector>& column, int k) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(column.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      if (column(a) != column(b)) return column(a) > column(b);
                      return a < b;
                    });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

double hinge(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

bool VideoLabel::has(int cls) const {
  return std::find(classes.begin(), classes.end(), cls) != classes.end();
}

FrameScores frame_scores(const Matrix& features, const Matrix& weights, std::string video_id) {
  if (features.cols() != weights.rows()) {
    throw std::domain_error("frame_scores: feature dimension " + std::to_string(features.cols()) +
                            " does not match weight rows " + std::to_string(weights.rows()));
  }
  return FrameScores{std::move(video_id), features * weights};
}

int top_k_count(int length, int kappa) { return std::max(1, length / kappa); }

Vector video_class_scores(const Matrix& scores, int kappa) {
  if (scores.rows() < 1) throw std::domain_error("video_class_scores: empty score matrix");
  const int k = top_k_count(static_cast<int>(scores.rows()), kappa);
  Vector out(scores.cols());
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const Vector column = scores.col(c);
    double sum = 0.0;
    for (Eigen::Index t : top_k_indices(column, k)) sum += column(t);
    out(c) = sum / k;
  }
  return out;
}

Matrix video_class_scores_backward(const Matrix& scores, const Vector& grad_video_scores,
                                   int kappa) {
  const int k = top_k_count(static_cast<int>(scores.rows()), kappa);
  Matrix grad = Matrix::Zero(scores.rows(), scores.cols());
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const Vector column = scores.col(c);
    for (Eigen::Index t : top_k_indices(column, k)) grad(t, c) = grad_video_scores(c) / k;
  }
  return grad;
}

double mil_loss(const Vector& video_scores, const VideoLabel& label, Vector* grad) {
  if (label.classes.empty()) throw std::invalid_argument("mil_loss: empty video label");
  const auto C = video_scores.size();
  Vector target = Vector::Zero(C);
  for (int cls : label.classes) {
    if (cls < 1 || cls > C) throw std::domain_error("mil_loss: class index out of range");
    target(cls - 1) = 1.0;
  }
  target /= target.sum();
  const Vector probs = softmax(video_scores);
  if (grad != nullptr) *grad = probs - target;
  return cross_entropy(target, probs);
}

RegionRepr region_representation(const Matrix& features, const Matrix& scores, int cls,
                                  std::string video_id) {
  const Eigen::Index T = features.rows();
  if (T < 2) throw std::domain_error("region_representation: needs at least two frames");
  if (scores.rows() != T) throw std::domain_error("region_representation: frame count mismatch");
  if (cls < 1 || cls > scores.cols()) throw std::domain_error("region_representation: bad class");

  RegionRepr repr;
  repr.video_id = std::move(video_id);
  repr.cls = cls;
  repr.attention = temporal_softmax(scores.col(cls - 1));
  repr.psi = features.transpose() * repr.attention;
  repr.phi = features.transpose() * (Vector::Ones(T) - repr.attention) / static_cast<double>(T - 1);
  return repr;
}

void region_representation_backward(const Matrix& features, const RegionRepr& repr,
                                    const Vector& grad_psi, const Vector& grad_phi,
                                    Matrix& grad_features, Matrix& grad_scores) {
  const Eigen::Index T = features.rows();
  const double inv = 1.0 / static_cast<double>(T - 1);
  const Vector& a = repr.attention;

  grad_features.noalias() += a * grad_psi.transpose();
  grad_features.noalias() += ((Vector::Ones(T) - a) * inv) * grad_phi.transpose();

  const Vector grad_attention = features * grad_psi - (features * grad_phi) * inv;
  grad_scores.col(repr.cls - 1) += softmax_backward(a, grad_attention);
}

double cas_pair_loss(const RegionRepr& first, const RegionRepr& second, double margin,
                     CasForm form, PairGrad* grad) {
  if (first.cls != second.cls) throw std::domain_error("cas_pair_loss: class mismatch");

  const double d_pp = cosine_similarity(first.psi, second.psi);
  const double d_pf = cosine_similarity(first.psi, second.phi);
  const double d_fp = cosine_similarity(first.phi, second.psi);

  // Each hinge is (positive term) - (negative term) + margin.
  double h1, h2;
  if (form == CasForm::Ranking) {
    h1 = d_pf - d_pp + margin;
    h2 = d_fp - d_pp + margin;
  } else {
    h1 = d_pp - d_pf + margin;
    h2 = d_pp - d_fp + margin;
  }
  const double loss = 0.5 * (hinge(h1) + hinge(h2));

  if (grad != nullptr) {
    const auto D = first.psi.size();
    grad->first = {Vector::Zero(D), Vector::Zero(D)};
    grad->second = {Vector::Zero(D), Vector::Zero(D)};
    const double sign = form == CasForm::Ranking ? 1.0 : -1.0;
    double w_pp = 0.0;
    if (h1 > 0.0) {
      cosine_similarity_backward(first.psi, second.phi, 0.5 * sign, grad->first.psi,
                                 grad->second.phi);
      w_pp -= 0.5 * sign;
    }
    if (h2 > 0.0) {
      cosine_similarity_backward(first.phi, second.psi, 0.5 * sign, grad->first.phi,
                                 grad->second.psi);
      w_pp -= 0.5 * sign;
    }
    if (w_pp != 0.0) {
      cosine_similarity_backward(first.psi, second.psi, w_pp, grad->first.psi, grad->second.psi);
    }
  }
  return loss;
}

double cas_loss(std::span<const VideoRegions> batch, double margin, CasForm form,
                std::vector<std::vector<RegionGrad>>* grads) {
  struct Pair {
    std::size_t vi, ri, vj, rj;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = i + 1; j < batch.size(); ++j) {
      for (std::size_t ri = 0; ri < batch[i].size(); ++ri) {
        for (std::size_t rj = 0; rj < batch[j].size(); ++rj) {
          if (batch[i][ri].cls == batch[j][rj].cls) pairs.push_back({i, ri, j, rj});
        }
      }
    }
  }

  if (grads != nullptr) {
    grads->assign(batch.size(), {});
    for (std::size_t v = 0; v < batch.size(); ++v) {
      for (const RegionRepr& r : batch[v]) {
        (*grads)[v].push_back({Vector::Zero(r.psi.size()), Vector::Zero(r.phi.size())});
      }
    }
  }
  if (pairs.empty()) return 0.0;

  const double scale = 1.0 / static_cast<double>(pairs.size());
  double total = 0.0;
  PairGrad pg;
  for (const Pair& p : pairs) {
    total += cas_pair_loss(batch[p.vi][p.ri], batch[p.vj][p.rj], margin, form,
                           grads != nullptr ? &pg : nullptr);
    if (grads != nullptr) {
      RegionGrad& gi = (*grads)[p.vi][p.ri];
      RegionGrad& gj = (*grads)[p.vj][p.rj];
      gi.psi += scale * pg.first.psi;
      gi.phi += scale * pg.first.phi;
      gj.psi += scale * pg.second.psi;
      gj.phi += scale * pg.second.phi;
    }
  }
  return total * scale;
}

ProposalSet generate_proposals(const FrameScores& scores, const Vector& video_scores,
                               const VideoLabel& label, const ProposalOptions& options) {
  const int T = scores.length();
  const int C = scores.classes();
  if (video_scores.size() != C) throw std::domain_error("generate_proposals: class count mismatch");

  Matrix frame_values = scores.scores;
  if (options.scale == ScoreScale::Softmax) {
    for (int t = 0; t < T; ++t) frame_values.row(t) = softmax(scores.scores.row(t)).transpose();
  }
  const Vector video_probs = softmax(video_scores);

  ProposalSet out;
  out.video_id = scores.video_id;
  for (int c = 1; c <= C; ++c) {
    if (video_probs(c - 1) < options.class_threshold) continue;
    if (!label.has(c)) continue;

    std::vector<std::pair<int, int>> runs;
    for (int t = 0; t < T; ++t) {
      if (!(frame_values(t, c - 1) >= options.score_threshold)) continue;
      if (!runs.empty() && t - runs.back().second - 1 <= options.gap) {
        runs.back().second = t;
      } else {
        runs.emplace_back(t, t);
      }
    }
    for (auto [first, last] : runs) {
      if (last - first + 1 < options.min_length) continue;
      const double mean = frame_values.col(c - 1).segment(first, last - first + 1).mean();
      out.proposals.push_back({c, first, last, mean});
    }
  }
  return out;
}

LabelTrack proposals_to_labels(const ProposalSet& proposals, int length) {
  LabelTrack track = LabelTrack::background(length, Provenance::Pseudo);
  std::vector<double> owner_score(static_cast<std::size_t>(length), 0.0);
  for (const TemporalProposal& p : proposals.proposals) {
    if (p.start_frame < 0 || p.end_frame < p.start_frame || p.end_frame >= length || p.cls < 1) {
      throw std::domain_error("proposals_to_labels: proposal [" + std::to_string(p.start_frame) +
                              ", " + std::to_string(p.end_frame) + "] outside video of length " +
                              std::to_string(length));
    }
    for (int t = p.start_frame; t <= p.end_frame; ++t) {
      const int current = track.frame_labels[t];
      const bool wins = current == 0 || p.score > owner_score[t] ||
                        (p.score == owner_score[t] && p.cls < current);
      if (wins) {
        track.frame_labels[t] = p.cls;
        owner_score[t] = p.score;
      }
    }
    track.start_bits[p.start_frame] = 1;
  }
  return track;
}

}  // namespace woad::tpg
