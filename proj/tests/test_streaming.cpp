// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "woad/streaming.hpp"

using namespace woad;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Model random_model(Rng& rng, int classes = 3, bool recurrent = true) {
  ModelShape shape;
  shape.input_dim = 5;
  shape.hidden = 6;
  shape.classes = classes;
  shape.window = 3;
  shape.recurrent = recurrent;
  Model m(shape);
  m.initialize(rng);
  for (Parameter* p : m.parameters()) p->value *= 3.0;
  return m;
}

// One action class, chosen by the sign of the input: [1, -1] -> action,
// [-1, 1] -> background. The start head is flat.
Model sign_model() {
  ModelShape shape;
  shape.input_dim = 2;
  shape.hidden = 2;
  shape.classes = 1;
  shape.window = 0;
  shape.recurrent = false;
  Model m(shape);
  m.trunk.weight.value.setIdentity();
  m.oar.ff1_w.value.setIdentity();
  m.oar.ff2_w.value = 5.0 * Matrix::Identity(2, 2);
  m.oar.head_action.value << 0.0, 5.0, 5.0, 0.0;
  return m;
}

Vector frame(bool action) {
  Vector x(2);
  x << (action ? 1.0 : -1.0), (action ? -1.0 : 1.0);
  return x;
}

}  // namespace

TEST_CASE("combined start scores") {
  oar::FrameOutput out{Vector(2), Vector(2)};
  out.action << 0.2, 0.8;
  out.start << 0.3, 0.7;
  Vector as;
  combine_start_scores(out, true, as);
  CHECK(as(0) == doctest::Approx(0.06));
  CHECK(as(1) == doctest::Approx(0.56));
  CHECK(argmax_lowest(as) == 1);

  combine_start_scores(out, false, as);
  CHECK(as == out.action);

  Vector tie(3);
  tie << 0.4, 0.4, 0.2;
  CHECK(argmax_lowest(tie) == 0);
}

TEST_CASE("start criteria") {
  CHECK(fires_start(2, 0, 0.3, 0.0));
  CHECK_FALSE(fires_start(0, 2, 0.9, 0.0));
  CHECK_FALSE(fires_start(2, 2, 0.9, 0.0));
  CHECK_FALSE(fires_start(2, 1, 0.0, 0.0));
  CHECK(fires_start(2, 1, 0.5, 0.0));
}

TEST_CASE("events fire at background-to-action transitions") {
  const Model m = sign_model();
  StreamSession s(m, 2.0);
  std::vector<int> fired;
  const bool pattern[] = {false, true, true, false, true};
  for (bool a : pattern) {
    const StepOutput& out = s.step(frame(a));
    CHECK(out.predicted == (a ? 1 : 0));
    if (out.event) fired.push_back(static_cast<int>(out.event->frame));
  }
  CHECK(fired == std::vector<int>{1, 4});

  StreamSession constant(m, 2.0);
  int events = 0;
  for (int t = 0; t < 10; ++t) events += constant.step(frame(true)).event.has_value();
  CHECK(events == 1);
}

TEST_CASE("event metadata") {
  const Model m = sign_model();
  StreamSession s(m, 4.0);
  s.step(frame(false));
  s.step(frame(false));
  const StepOutput& out = s.step(frame(true));
  REQUIRE(out.event.has_value());
  CHECK(out.event->frame == 2);
  CHECK(out.event->time_s == 0.5);
  CHECK(out.event->cls == 1);
  CHECK(out.event->confidence == out.combined(1));
}

TEST_CASE("dimension mismatch poisons the session") {
  Rng rng(1);
  const Model m = random_model(rng);
  StreamSession s(m, 1.0);
  s.step(random_matrix(5, 1, rng).col(0));
  CHECK_THROWS_AS(s.step(Vector::Zero(4)), std::domain_error);
  CHECK(s.poisoned());
  CHECK_THROWS(s.step(random_matrix(5, 1, rng).col(0)));
  CHECK_THROWS_AS(StreamSession(m, 0.0), std::invalid_argument);
}

TEST_CASE("run_stream equals a manual step loop") {
  Rng rng(2);
  const Model m = random_model(rng);
  const Matrix x = random_matrix(30, 5, rng);
  StreamSession a(m, 1.5), b(m, 1.5);
  const DetectionLog log = run_stream(a, x, "v");
  CHECK(log.length() == 30);
  CHECK(log.fps == 1.5);
  std::size_t event = 0;
  for (int t = 0; t < 30; ++t) {
    const StepOutput& out = b.step(x.row(t).transpose());
    CHECK(log.action_prob.row(t).transpose() == out.output.action);
    CHECK(log.start_prob.row(t).transpose() == out.output.start);
    CHECK(log.combined.row(t).transpose() == out.combined);
    CHECK(log.predicted[t] == out.predicted);
    if (out.event) {
      REQUIRE(event < log.events.size());
      CHECK(log.events[event].frame == out.event->frame);
      CHECK(log.events[event].confidence == out.event->confidence);
      ++event;
    }
  }
  CHECK(event == log.events.size());
}

TEST_CASE("stream invariants") {
  Rng rng(3);
  for (bool recurrent : {true, false}) {
    const Model m = random_model(rng, 4, recurrent);
    StreamSession s(m, 1.0);
    const DetectionLog log = run_stream(s, random_matrix(200, 5, rng));
    for (int t = 0; t < log.length(); ++t) {
      CHECK((log.combined.row(t).array() >= 0.0).all());
      CHECK((log.combined.row(t).array() <= 1.0).all());
      CHECK(log.combined.row(t).sum() <= 1.0 + 1e-12);
      if (log.event_flags[t]) {
        CHECK(log.predicted[t] != 0);
        CHECK((t == 0 || log.predicted[t] != log.predicted[t - 1]));
      }
    }
  }
}

TEST_CASE("suffix mutation never changes the logged prefix") {
  Rng rng(4);
  const Model m = random_model(rng);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = rng.range(2, 40);
    Matrix x = random_matrix(T, 5, rng);
    StreamSession a(m, 1.0);
    const DetectionLog before = run_stream(a, x);
    const int t = rng.range(0, T - 2);
    x.bottomRows(T - t - 1) = random_matrix(T - t - 1, 5, rng);
    StreamSession b(m, 1.0);
    const DetectionLog after = run_stream(b, x);
    CHECK(before.action_prob.topRows(t + 1) == after.action_prob.topRows(t + 1));
    CHECK(before.start_prob.topRows(t + 1) == after.start_prob.topRows(t + 1));
    CHECK(before.combined.topRows(t + 1) == after.combined.topRows(t + 1));
    CHECK(std::equal(before.predicted.begin(), before.predicted.begin() + t + 1, after.predicted.begin()));
    CHECK(std::equal(before.event_flags.begin(), before.event_flags.begin() + t + 1, after.event_flags.begin()));
  }
}
