// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <string>
#include <vector>

#include "woad/labels.hpp"
#include "woad/numerics.hpp"

// Temporal proposal generator: frame scoring, top-k video classification,
// co-activity similarity and two-stage threshold proposal mining.
namespace woad::tpg {

inline constexpr int kDefaultTopKDivisor = 8;

/// T x C per-frame class logits (background excluded).
struct FrameScores {
  std::string video_id;
  Matrix scores;

  int length() const { return static_cast<int>(scores.rows()); }
  int classes() const { return static_cast<int>(scores.cols()); }
};

/// Video-level multi-hot label; class indices are 1-based.
struct VideoLabel {
  std::string video_id;
  std::vector<int> classes;

  bool has(int cls) const;
};

/// S = F W. No bias and no activation.
FrameScores frame_scores(const Matrix& features, const Matrix& weights, std::string video_id = {});

/// max(1, floor(T / kappa)).
int top_k_count(int length, int kappa = kDefaultTopKDivisor);

/// Mean of the k largest entries of each column.
Vector video_class_scores(const Matrix& scores, int kappa = kDefaultTopKDivisor);

/// Gradient of video_class_scores w.r.t. the T x C score matrix. Equal entries
/// are ranked by earlier frame first, matching the forward selection.
Matrix video_class_scores_backward(const Matrix& scores, const Vector& grad_video_scores,
                                   int kappa = kDefaultTopKDivisor);

/// Cross entropy between the normalized multi-hot label and softmax(video_scores).
/// Writes dL/d(video_scores) into `grad` when given.
double mil_loss(const Vector& video_scores, const VideoLabel& label, Vector* grad = nullptr);

/// High- and low-attention pooled features of one class in one video.
struct RegionRepr {
  std::string video_id;
  int cls = 0;
  Vector psi;
  Vector phi;
  Vector attention;
};

/// Psi = F^T A and Phi = F^T (1 - A) / (T - 1) with A the temporal softmax of
/// the class column. Requires T >= 2.
RegionRepr region_representation(const Matrix& features, const Matrix& scores, int cls,
                                 std::string video_id = {});

/// Accumulates gradients of Psi/Phi into the feature and score matrices.
void region_representation_backward(const Matrix& features, const RegionRepr& repr,
                                    const Vector& grad_psi, const Vector& grad_phi,
                                    Matrix& grad_features, Matrix& grad_scores);

enum class CasForm {
  /// Same-class high-attention regions pulled together, pushed from low ones.
  Ranking,
  /// The two hinges with the opposite sign: similar pairs are pushed apart.
  Verbatim,
};

struct RegionGrad {
  Vector psi;
  Vector phi;
};

struct PairGrad {
  RegionGrad first;
  RegionGrad second;
};

double cas_pair_loss(const RegionRepr& first, const RegionRepr& second, double margin,
                     CasForm form = CasForm::Ranking, PairGrad* grad = nullptr);

/// Regions of one video, one entry per labelled class.
using VideoRegions = std::vector<RegionRepr>;

/// Mean pair loss over all unordered same-class video pairs. Zero when the
/// batch has no pair. `grads`, when given, is resized to mirror `batch`.
double cas_loss(std::span<const VideoRegions> batch, double margin, CasForm form = CasForm::Ranking,
                std::vector<std::vector<RegionGrad>>* grads = nullptr);

struct TemporalProposal {
  int cls = 0;
  int start_frame = 0;
  int end_frame = 0;
  double score = 0.0;

  friend bool operator==(const TemporalProposal&, const TemporalProposal&) = default;
};

struct ProposalSet {
  std::string video_id;
  std::vector<TemporalProposal> proposals;
};

enum class ScoreScale {
  /// Threshold the raw frame logits.
  Raw,
  /// Threshold per-frame softmax over classes.
  Softmax,
};

struct ProposalOptions {
  double class_threshold = 0.1;
  double score_threshold = 0.0;
  int gap = 0;
  int min_length = 1;
  ScoreScale scale = ScoreScale::Raw;
};

/// Two-stage thresholding: keep classes whose video probability passes
/// `class_threshold`, mark frames whose score passes `score_threshold`, merge
/// runs separated by at most `gap` unmarked frames, drop runs shorter than
/// `min_length` and classes outside the video label. Output is sorted by
/// class then start frame.
ProposalSet generate_proposals(const FrameScores& scores, const Vector& video_scores,
                               const VideoLabel& label, const ProposalOptions& options = {});

/// Frames inside a proposal take its class; overlaps go to the higher score,
/// then the lower class index. Start bits sit at every proposal start.
LabelTrack proposals_to_labels(const ProposalSet& proposals, int length);

}  // namespace woad::tpg
