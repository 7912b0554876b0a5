// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "woad/random.hpp"
#include "woad/tpg.hpp"

using namespace woad;
using namespace woad::tpg;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

FrameScores column_scores(std::vector<double> values) {
  FrameScores s;
  s.scores = Matrix(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t t = 0; t < values.size(); ++t) s.scores(static_cast<Eigen::Index>(t), 0) = values[t];
  return s;
}

}  // namespace

TEST_CASE("frame scores") {
  Rng rng(1);
  const Matrix F = random_matrix(3, 4, rng);
  CHECK(frame_scores(F, Matrix::Zero(4, 2)).scores.isZero());

  const Matrix I = Matrix::Identity(3, 3);
  CHECK(frame_scores(I, I).scores == I);

  const Matrix W = random_matrix(4, 2, rng);
  const Matrix S = frame_scores(F, W).scores;
  for (int t = 0; t < 3; ++t) {
    for (int c = 0; c < 2; ++c) {
      double sum = 0.0;
      for (int d = 0; d < 4; ++d) sum += F(t, d) * W(d, c);
      CHECK(S(t, c) == doctest::Approx(sum).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(frame_scores(F, Matrix::Zero(3, 2)), std::domain_error);
}

TEST_CASE("top-k video scores") {
  CHECK(top_k_count(16) == 2);
  CHECK(top_k_count(4) == 1);
  CHECK(top_k_count(1) == 1);

  std::vector<double> col = {0.9, 0.8};
  col.resize(16, 0.1);
  CHECK(video_class_scores(column_scores(col).scores)(0) == doctest::Approx(0.85));
  CHECK(video_class_scores(Matrix::Constant(13, 2, -0.4)).isApprox(Vector::Constant(2, -0.4)));
  CHECK(video_class_scores(column_scores({0.2, 0.7, -1.0, 0.1}).scores)(0) == 0.7);

  // Sort-and-average oracle.
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix S = random_matrix(rng.range(1, 40), rng.range(1, 5), rng);
    const Vector v = video_class_scores(S);
    const int K = std::max(1, static_cast<int>(S.rows()) / 8);
    for (Eigen::Index c = 0; c < S.cols(); ++c) {
      std::vector<double> column;
      for (Eigen::Index t = 0; t < S.rows(); ++t) column.push_back(S(t, c));
      std::sort(column.begin(), column.end(), std::greater<>());
      double sum = 0.0;
      for (int k = 0; k < K; ++k) sum += column[static_cast<std::size_t>(k)];
      CHECK(v(c) == doctest::Approx(sum / K).epsilon(1e-14));
    }
    // Monotone in every frame score.
    Matrix raised = S;
    raised(rng.range(0, static_cast<int>(S.rows()) - 1), rng.range(0, static_cast<int>(S.cols()) - 1)) += rng.uniform();
    CHECK((video_class_scores(raised).array() >= v.array()).all());
  }
}

TEST_CASE("mil loss") {
  CHECK(mil_loss(Vector::Constant(1, 3.0), {"v", {1}}) == 0.0);
  CHECK(mil_loss(Vector::Zero(2), {"v", {1}}) == doctest::Approx(std::log(2.0)));
  CHECK(mil_loss(Vector::Zero(2), {"v", {1, 2}}) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(mil_loss(Vector::Zero(2), {"v", {}}), std::invalid_argument);
}

TEST_CASE("mil gradient through top-k") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Parameter S("S", rng.range(1, 16), rng.range(1, 4));
    S.value = random_matrix(S.value.rows(), S.value.cols(), rng);
    const VideoLabel label{"v", {rng.range(1, static_cast<int>(S.value.cols()))}};
    auto loss = [&](bool accumulate) {
      Vector g;
      const double l = mil_loss(video_class_scores(S.value), label, accumulate ? &g : nullptr);
      if (accumulate) S.grad += video_class_scores_backward(S.value, g);
      return l;
    };
    Parameter* list[] = {&S};
    CHECK(grad_check(loss, list).max_relative_error <= 1e-5);
  }
}

TEST_CASE("region representations") {
  Rng rng(4);
  const Matrix F = random_matrix(5, 3, rng);
  Matrix S = Matrix::Zero(5, 1);
  S(2, 0) = 100.0;
  const RegionRepr r = region_representation(F, S, 1);
  CHECK((r.psi - F.row(2).transpose()).cwiseAbs().maxCoeff() <= 1e-6);

  const Matrix F2 = random_matrix(2, 3, rng);
  const RegionRepr u = region_representation(F2, Matrix::Zero(2, 1), 1);
  const Vector mean = F2.colwise().mean().transpose();
  CHECK(u.psi.isApprox(mean));
  CHECK(u.phi.isApprox(mean));

  const RegionRepr z = region_representation(Matrix::Zero(4, 3), random_matrix(4, 2, rng), 2);
  CHECK(z.psi.isZero());
  CHECK(z.phi.isZero());

  CHECK_THROWS_AS(region_representation(Matrix::Zero(1, 3), Matrix::Zero(1, 1), 1), std::domain_error);
  CHECK_THROWS_AS(region_representation(F, S, 2), std::domain_error);
}

TEST_CASE("cas pair loss examples") {
  RegionRepr a, b;
  a.cls = b.cls = 1;
  a.psi = b.psi = Vector::Unit(3, 0);
  a.phi = b.phi = Vector::Unit(3, 1);
  CHECK(cas_pair_loss(a, b, 0.5) == 0.0);

  a.phi = b.phi = a.psi;
  CHECK(cas_pair_loss(a, b, 0.5) == doctest::Approx(0.5));

  // Psi_i and Phi_j equally similar to Psi_j, zero margin.
  a.psi = Vector::Unit(3, 0);
  b.psi = Vector::Unit(3, 0);
  b.phi = Vector::Unit(3, 0);
  a.phi = Vector::Unit(3, 2);
  CHECK(cas_pair_loss(a, b, 0.0) == 0.0);

  b.cls = 2;
  CHECK_THROWS_AS(cas_pair_loss(a, b, 0.5), std::domain_error);
}

TEST_CASE("cas loss over a batch") {
  RegionRepr same, orth;
  same.cls = orth.cls = 1;
  same.psi = same.phi = Vector::Unit(2, 0);
  orth.psi = Vector::Unit(2, 0);
  orth.phi = Vector::Unit(2, 1);

  std::vector<VideoRegions> none = {{same}, {}};
  none[1].push_back(same);
  none[1][0].cls = 2;
  CHECK(cas_loss(none, 0.5) == 0.0);

  std::vector<VideoRegions> one = {{same}, {orth}};
  CHECK(cas_loss(one, 0.5) == cas_pair_loss(same, orth, 0.5));

  // Three videos of class 1: pairs (0,1), (0,2), (1,2).
  std::vector<VideoRegions> three = {{same}, {same}, {orth}};
  const double expected =
      (cas_pair_loss(same, same, 0.5) + cas_pair_loss(same, orth, 0.5) + cas_pair_loss(same, orth, 0.5)) / 3.0;
  CHECK(cas_loss(three, 0.5) == doctest::Approx(expected));
  // Hand values: identical regions give 0.5; same vs orth: h1 = d(psi, phi_orth) - 1 + .5 < 0,
  // h2 = d(phi_same, psi_orth) - 1 + .5 = .5, so 0.25 each.
  CHECK(cas_loss(three, 0.5) == doctest::Approx((0.5 + 0.25 + 0.25) / 3.0));
}

TEST_CASE("cas loss is scale invariant and differentiable") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Matrix> F, S;
    for (int v = 0; v < 3; ++v) {
      F.push_back(random_matrix(rng.range(2, 10), 4, rng));
      S.push_back(random_matrix(F.back().rows(), 2, rng));
    }
    auto batch = [&](double scale) {
      std::vector<VideoRegions> b(3);
      for (int v = 0; v < 3; ++v) b[v].push_back(region_representation(scale * F[v], S[v], 1));
      return b;
    };
    CHECK(std::abs(cas_loss(batch(1.0), 0.5) - cas_loss(batch(7.3), 0.5)) <= 1e-9);
  }

  std::vector<Parameter> F, S;
  F.reserve(3);
  S.reserve(3);
  for (int v = 0; v < 3; ++v) {
    F.emplace_back("F" + std::to_string(v), 6, 3);
    S.emplace_back("S" + std::to_string(v), 6, 2);
    F.back().value = random_matrix(6, 3, rng);
    S.back().value = random_matrix(6, 2, rng);
  }
  for (CasForm form : {CasForm::Ranking, CasForm::Verbatim}) {
    auto loss = [&](bool accumulate) {
      std::vector<VideoRegions> b(3);
      for (int v = 0; v < 3; ++v) b[v].push_back(region_representation(F[v].value, S[v].value, 2));
      std::vector<std::vector<RegionGrad>> g;
      const double l = cas_loss(b, 1.0, form, accumulate ? &g : nullptr);
      if (accumulate) {
        for (int v = 0; v < 3; ++v) {
          region_representation_backward(F[v].value, b[v][0], g[v][0].psi, g[v][0].phi, F[v].grad, S[v].grad);
        }
      }
      return l;
    };
    ParameterList list = {&F[0], &S[0], &F[1], &S[1], &F[2], &S[2]};
    CHECK(grad_check(loss, list).max_relative_error <= 1e-5);
  }
}

TEST_CASE("proposal examples") {
  FrameScores s = column_scores({0.9, 0.8, 0.1, 0.7, 0.9});
  const VideoLabel label{"v", {1}};
  const Vector video = Vector::Constant(1, 1.0);
  ProposalOptions o;
  o.score_threshold = 0.5;

  auto p = generate_proposals(s, video, label, o).proposals;
  REQUIRE(p.size() == 2);
  CHECK(p[0].start_frame == 0);
  CHECK(p[0].end_frame == 1);
  CHECK(p[1].start_frame == 3);
  CHECK(p[1].end_frame == 4);
  CHECK(p[0].score == doctest::Approx(0.85));

  o.gap = 1;
  p = generate_proposals(s, video, label, o).proposals;
  REQUIRE(p.size() == 1);
  CHECK(p[0].start_frame == 0);
  CHECK(p[0].end_frame == 4);

  o.class_threshold = 1.01;
  CHECK(generate_proposals(s, video, label, o).proposals.empty());
}

TEST_CASE("proposals match the brute-force grouping oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = rng.range(1, 64);
    const int C = rng.range(1, 5);
    FrameScores s;
    s.scores = random_matrix(T, C, rng);
    const Vector video = random_matrix(C, 1, rng).col(0);
    VideoLabel label{"v", {}};
    for (int c = 1; c <= C; ++c) {
      if (rng.uniform() < 0.6) label.classes.push_back(c);
    }
    ProposalOptions o;
    o.class_threshold = rng.uniform(0.0, 0.4);
    o.score_threshold = rng.uniform(-0.5, 0.8);
    o.gap = rng.range(0, 3);
    o.min_length = rng.range(1, 3);

    const auto got = generate_proposals(s, video, label, o).proposals;

    std::vector<oracle::Interval> want;
    const Vector probs = softmax(video);
    for (int c = 1; c <= C; ++c) {
      if (probs(c - 1) < o.class_threshold || !label.has(c)) continue;
      std::vector<double> column(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) column[static_cast<std::size_t>(t)] = s.scores(t, c - 1);
      for (const auto& iv : oracle::group_frames(column, c, o.score_threshold, o.gap, o.min_length)) {
        want.push_back(iv);
      }
    }
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].cls == want[k].cls);
      CHECK(got[k].start_frame == want[k].first);
      CHECK(got[k].end_frame == want[k].last);
      CHECK(got[k].score == doctest::Approx(want[k].score).epsilon(1e-12));
      CHECK(label.has(got[k].cls));
      if (k > 0 && got[k].cls == got[k - 1].cls) CHECK(got[k].start_frame > got[k - 1].end_frame + o.gap);
    }
  }
}

TEST_CASE("proposals to labels") {
  ProposalSet p;
  p.proposals = {{1, 0, 1, 0.5}, {1, 3, 4, 0.5}};
  LabelTrack t = proposals_to_labels(p, 6);
  CHECK(t.frame_labels == std::vector<int>{1, 1, 0, 1, 1, 0});
  CHECK(t.start_bits == std::vector<std::uint8_t>{1, 0, 0, 1, 0, 0});
  CHECK(t.provenance == Provenance::Pseudo);

  CHECK(proposals_to_labels(ProposalSet{}, 4) == LabelTrack::background(4, Provenance::Pseudo));

  p.proposals = {{1, 0, 3, 0.9}, {2, 2, 5, 0.4}};
  t = proposals_to_labels(p, 6);
  CHECK(t.frame_labels == std::vector<int>{1, 1, 1, 1, 2, 2});
  p.proposals = {{2, 2, 5, 0.4}, {1, 0, 3, 0.9}};
  CHECK(proposals_to_labels(p, 6).frame_labels == std::vector<int>{1, 1, 1, 1, 2, 2});
  // Equal scores: lower class wins regardless of order.
  p.proposals = {{3, 0, 2, 0.5}, {2, 1, 3, 0.5}};
  CHECK(proposals_to_labels(p, 4).frame_labels == std::vector<int>{3, 2, 2, 2});

  p.proposals = {{1, 4, 7, 0.5}};
  CHECK_THROWS_AS(proposals_to_labels(p, 6), std::domain_error);
}
