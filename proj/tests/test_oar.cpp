// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>

#include "woad/oar.hpp"
#include "woad/random.hpp"

using namespace woad;
using namespace woad::oar;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

OarParams random_params(const OarShape& shape, Rng& rng, double spread = 1.0) {
  OarParams p(shape);
  p.initialize(rng);
  for (Parameter* q : p.parameters()) q->value *= spread;
  return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM step written out scalar by scalar.
void scalar_lstm(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c,
                 const OarParams& p) {
  const int H = static_cast<int>(h.size());
  const int D = static_cast<int>(x.size());
  std::vector<double> z(static_cast<std::size_t>(4 * H));
  for (int k = 0; k < 4 * H; ++k) {
    double acc = p.lstm_b.value(0, k);
    for (int d = 0; d < D; ++d) acc += x[d] * p.lstm_wx.value(d, k);
    for (int j = 0; j < H; ++j) acc += h[j] * p.lstm_wh.value(j, k);
    z[k] = acc;
  }
  for (int j = 0; j < H; ++j) {
    const double i = sigmoid(z[j]);
    const double f = sigmoid(z[H + j]);
    const double g = std::tanh(z[2 * H + j]);
    const double o = sigmoid(z[3 * H + j]);
    c[j] = f * c[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

}  // namespace

TEST_CASE("lstm step with zero weights") {
  OarShape shape{3, 4, 2, 3, true};
  OarParams p(shape);
  OarState s = OarState::initial(shape);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  lstm_step(s, x, p);
  CHECK(s.h.isZero());
  CHECK(s.c.isZero());
  CHECK(s.frame == 1);
}

TEST_CASE("saturated forget gate keeps a zero cell at zero") {
  OarShape shape{2, 3, 1, 0, true};
  OarParams p(shape);
  p.lstm_b.value.middleCols(3, 3).setConstant(1e3);
  OarState s = OarState::initial(shape);
  lstm_step(s, Vector::Zero(2), p);
  CHECK(s.c.isZero());
}

TEST_CASE("lstm step matches the scalar oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    OarShape shape{rng.range(1, 6), rng.range(1, 6), 2, 2, true};
    const OarParams p = random_params(shape, rng, 2.0);
    OarState s = OarState::initial(shape);
    std::vector<double> h(static_cast<std::size_t>(shape.hidden), 0.0), c = h;
    for (int t = 0; t < 6; ++t) {
      std::vector<double> x(static_cast<std::size_t>(shape.input_dim));
      Vector xv(shape.input_dim);
      for (int d = 0; d < shape.input_dim; ++d) xv(d) = x[d] = rng.normal();
      lstm_step(s, xv, p);
      scalar_lstm(x, h, c, p);
      for (int j = 0; j < shape.hidden; ++j) {
        CHECK(std::abs(s.h(j) - h[j]) <= 1e-12);
        CHECK(std::abs(s.c(j) - c[j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("non-finite state aborts the step") {
  OarShape shape{2, 2, 1, 1, true};
  OarParams p(shape);
  OarState s = OarState::initial(shape);
  Vector x(2);
  x << std::nan(""), 0.0;
  p.lstm_wx.value.setOnes();
  CHECK_THROWS_AS(lstm_step(s, x, p), std::domain_error);
}

TEST_CASE("temporal pool") {
  HiddenRing single(4, 2);
  Vector h(2);
  h << 0.3, -0.7;
  single.push(h, 0);
  CHECK(temporal_pool(single) == h);

  HiddenRing ring(4, 2);
  Vector r(2);
  r << 1, 0;
  ring.push(r, 0);
  r << 0, 1;
  ring.push(r, 1);
  r << -1, 2;
  ring.push(r, 2);
  Vector expected(2);
  expected << 1, 2;
  CHECK(temporal_pool(ring) == expected);

  HiddenRing same(3, 2);
  for (int t = 0; t < 5; ++t) same.push(h, t);
  CHECK(temporal_pool(same) == h);
  CHECK(same.size() == 3);

  CHECK_THROWS_AS(temporal_pool(HiddenRing(3, 2)), std::domain_error);
}

TEST_CASE("pool ties route to the earliest frame") {
  HiddenRing ring(3, 1);
  Vector v(1);
  v << 0.5;
  ring.push(v, 10);
  ring.push(v, 11);
  Vector out;
  std::vector<std::int64_t> source;
  ring.pool(out, &source);
  CHECK(source[0] == 10);
}

TEST_CASE("window zero pools to the current hidden and pool dominates h") {
  Rng rng(2);
  for (int window : {0, 1, 3}) {
    OarShape shape{3, 5, 2, window, true};
    const OarParams p = random_params(shape, rng);
    OarState s = OarState::initial(shape);
    for (int t = 0; t < 20; ++t) {
      cell_step(s, random_matrix(3, 1, rng).col(0), p);
      const Vector pooled = temporal_pool(s.ring);
      if (window == 0) CHECK(pooled == s.h);
      CHECK((pooled.array() >= s.h.array()).all());
    }
  }
}

TEST_CASE("heads") {
  OarShape shape{2, 3, 2, 1, true};
  OarParams p(shape);
  const Vector h = Vector::Constant(3, 0.4);
  FrameOutput out = heads(h, h, p);
  CHECK(out.action.isApprox(Vector::Constant(3, 1.0 / 3.0)));
  CHECK(out.start.isApprox(Vector::Constant(2, 0.5)));

  p.head_start.value << 1.0, 2.0, 0.0, 0.0, 0.0, 0.0;
  Vector pooled = Vector::Zero(3);
  pooled(0) = 1.0;
  out = heads(h, pooled, p);
  const double e = std::exp(1.0);
  CHECK(out.start(0) == doctest::Approx(e / (e + e * e)));
  CHECK(out.start(1) == doctest::Approx(e * e / (e + e * e)));

  Rng rng(3);
  const OarParams q = random_params(shape, rng, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    const FrameOutput o = heads(random_matrix(3, 1, rng, 100.0).col(0), random_matrix(3, 1, rng, 100.0).col(0), q);
    CHECK(std::abs(o.action.sum() - 1.0) <= 1e-12);
    CHECK(std::abs(o.start.sum() - 1.0) <= 1e-12);
    CHECK((o.action.array() >= 0.0).all());
  }
}

TEST_CASE("frame loss") {
  Matrix perfect = Matrix::Zero(2, 3);
  perfect(0, 1) = perfect(1, 0) = 1.0;
  const std::vector<int> labels = {1, 0};
  CHECK(frame_loss(perfect, labels) == 0.0);

  const Matrix uniform = Matrix::Constant(2, 3, 1.0 / 3.0);
  CHECK(frame_loss(uniform, labels) == doctest::Approx(std::log(3.0)));

  Matrix two(2, 2);
  two << 0.2, 0.8, 0.6, 0.4;
  const std::vector<int> l2 = {1, 1};
  CHECK(frame_loss(two, l2) == doctest::Approx((-std::log(0.8) - std::log(0.4)) / 2));

  const std::vector<int> short_labels = {1};
  CHECK_THROWS_AS(frame_loss(two, short_labels), std::domain_error);
}

TEST_CASE("start loss examples") {
  Matrix st(1, 2);
  st << 0.0, 1.0;
  const std::vector<std::uint8_t> start = {1}, sel = {1};
  CHECK(start_loss(st, start, sel, 2.0) == 0.0);
  st << 0.5, 0.5;
  CHECK(start_loss(st, start, sel, 2.0) == doctest::Approx(0.25 * std::log(2.0)));
  CHECK(oar_loss(0.0, 0.0) == 0.0);
  CHECK(oar_loss(std::log(3.0), 0.0) == std::log(3.0));
  CHECK(oar_loss(0.5, 0.25) == 0.75);
}

TEST_CASE("focal loss with gamma zero is cross entropy") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int N = rng.range(1, 40);
    Matrix st(N, 2);
    std::vector<std::uint8_t> starts(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      st(j, 1) = rng.uniform(0.001, 0.999);
      st(j, 0) = 1.0 - st(j, 1);
      starts[j] = rng.uniform() < 0.2;
    }
    Rng a(trial), b(trial);
    StartLossOptions o;
    o.gamma = 0.0;
    const double focal = start_loss(st, starts, o, a);
    const auto sel = select_start_frames(starts, 3, b);
    double ce = 0.0;
    int n = 0;
    for (int j = 0; j < N; ++j) {
      if (!sel[j]) continue;
      ce -= std::log(st(j, starts[j] ? 1 : 0));
      ++n;
    }
    CHECK(std::abs(focal - ce / n) <= 1e-12);
  }
}

TEST_CASE("start frame selection") {
  Rng rng(5);
  std::vector<std::uint8_t> starts(40, 0);
  starts[3] = starts[17] = 1;
  const auto sel = select_start_frames(starts, 3, rng);
  int total = 0;
  for (std::size_t j = 0; j < sel.size(); ++j) {
    total += sel[j];
    if (starts[j]) CHECK(sel[j] == 1);
  }
  CHECK(total == 8);

  const std::vector<std::uint8_t> none(10, 0);
  int picked = 0;
  for (auto s : select_start_frames(none, 3, rng)) picked += s;
  CHECK(picked == 1);

  const std::vector<std::uint8_t> dense = {1, 1, 0, 1};
  int all = 0;
  for (auto s : select_start_frames(dense, 3, rng)) all += s;
  CHECK(all == 4);
}

TEST_CASE("backward through time passes the gradient check") {
  Rng rng(6);
  for (bool recurrent : {true, false}) {
    for (int window : {0, 2, 3}) {
      OarShape shape{4, 6, 3, window, recurrent};
      OarParams p = random_params(shape, rng, 2.0);
      Parameter inputs("inputs", 8, 4);
      inputs.value = random_matrix(8, 4, rng);
      std::vector<int> labels;
      std::vector<std::uint8_t> starts, selected;
      for (int t = 0; t < 8; ++t) {
        labels.push_back(rng.range(0, 3));
        starts.push_back(rng.uniform() < 0.3);
      }
      selected = select_start_frames(starts, 3, rng);
      auto loss = [&](bool accumulate) {
        const SequenceTrace trace = forward_sequence(inputs.value, p);
        Matrix ga, gs;
        const double l = frame_loss(trace.action_prob, labels, accumulate ? &ga : nullptr) +
                         start_loss(trace.start_prob, starts, selected, 2.0, StartNormalization::Selected,
                                    accumulate ? &gs : nullptr);
        if (accumulate) backward_sequence(inputs.value, p, trace, ga, gs, &inputs.grad);
        return l;
      };
      ParameterList list = p.parameters();
      list.push_back(&inputs);
      CHECK(grad_check(loss, list).max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("recognizer outputs are causal") {
  Rng rng(7);
  OarShape shape{3, 5, 2, 3, true};
  const OarParams p = random_params(shape, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = rng.range(2, 20);
    Matrix x = random_matrix(T, 3, rng);
    const SequenceTrace a = forward_sequence(x, p);
    const int t = rng.range(0, T - 2);
    x.bottomRows(T - t - 1) = random_matrix(T - t - 1, 3, rng);
    const SequenceTrace b = forward_sequence(x, p);
    CHECK(a.action_prob.topRows(t + 1) == b.action_prob.topRows(t + 1));
    CHECK(a.start_prob.topRows(t + 1) == b.start_prob.topRows(t + 1));
  }
}
