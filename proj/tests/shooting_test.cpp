//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace so3ocp;
using namespace so3ocp::testing;

namespace {

struct Problem {
  ScenarioConfig cfg = builtin_scenario("pend-i");
  Solution solve(const RecordSink &sink = {}) const {
    return so3ocp::solve(cfg.boundary, cfg.model, cfg.input_matrix, cfg.shooting, sink);
  }
};

const Solution &case_i() {
  static const Solution s = Problem{}.solve();
  return s;
}

TEST(TerminalError, ZeroAtTarget) {
  BoundaryConditions bc;
  bc.RNd = exp_so3(Vec3(0.1, 0.2, 0.3));
  bc.PiNd = Vec3(1, 2, 3);
  const TerminalError e = terminal_error(bc.RNd, bc.PiNd, bc);
  EXPECT_EQ(e.norm, 0.0);
}

TEST(TerminalError, HalfTurn) {
  BoundaryConditions bc;
  bc.RNd = Vec3(-1, -1, 1).asDiagonal();
  const TerminalError e = terminal_error(Mat3::Identity(), Vec3::Zero(), bc);
  EXPECT_LE((e.zeta - Vec3(0, 0, std::numbers::pi)).norm(), 1e-15);
  EXPECT_NEAR(e.norm, std::numbers::pi, 1e-15);
}

TEST(TerminalError, SmallOffsetIsRecovered) {
  std::mt19937_64 gen(81);
  const Mat3 rn = random_rotation(gen);
  const Vec3 xi = random_vec(gen, 1e-4), dpi = random_vec(gen, 1e-4);
  BoundaryConditions bc;
  bc.RNd = rn * exp_so3(xi);
  bc.PiNd = Vec3(0.5, 0.5, 0.5) + dpi;
  const TerminalError e = terminal_error(rn, Vec3(0.5, 0.5, 0.5), bc);
  EXPECT_LE((e.zeta - xi).norm(), 1e-14);
  EXPECT_LE((e.dPi - dpi).norm(), 1e-15);
}

TEST(InitialMultipliers, Policies) {
  ShootingConfig c;
  c.lam0_init = Lam0Policy::Zero;
  EXPECT_EQ(initial_multipliers(c).stacked(), Vec6::Zero());
  c.lam0_init = Lam0Policy::Explicit;
  c.lam0_explicit << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(initial_multipliers(c).stacked(), c.lam0_explicit);
  c.lam0_init = Lam0Policy::RandomUniform;
  c.lam0_scale = 0.25;
  const Vec6 a = initial_multipliers(c).stacked();
  EXPECT_EQ(a, initial_multipliers(c).stacked());
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_GT(a.cwiseAbs().minCoeff(), 0.0);
  c.seed = 2;
  EXPECT_NE(a, initial_multipliers(c).stacked());
}

TEST(Solve, TrivialBoundaryConvergesImmediately) {
  ShootingConfig c;
  c.N = 100;
  c.lam0_init = Lam0Policy::Zero;
  const Solution s = solve({}, pendulum(1.0), pendulum_input(), c);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.outer_iterations, 0);
  EXPECT_EQ(s.J, 0.0);
  ASSERT_EQ(s.records.size(), 1u);
}

TEST(Solve, PendulumQuarterTurnCase) {
  const Solution &s = case_i();
  ASSERT_TRUE(s.converged);
  EXPECT_NEAR(s.J, 1.52, 0.05 * 1.52);
  EXPECT_LE(s.terminal_attitude_violation, 1e-10);
  EXPECT_LE(s.terminal_momentum_violation, 1e-10);
  EXPECT_LE(s.outer_iterations, 50);
  EXPECT_EQ(s.trajectory.points.size(), 1001u);
}

TEST(Solve, AcceptedErrorsDecreaseWithSufficientDecrease) {
  const Solution &s = case_i();
  const double alpha = Problem{}.cfg.shooting.alpha;
  double prev = std::numeric_limits<double>::infinity();
  int accepted = 0;
  for (const auto &r : s.records) {
    if (!r.accepted) continue;
    if (r.outer > 0) {
      EXPECT_LE(r.error, (1.0 - 2.0 * alpha * r.c) * prev);
    }
    EXPECT_LT(r.error, prev);
    prev = r.error;
    ++accepted;
  }
  EXPECT_EQ(accepted, s.outer_iterations + 1);
  EXPECT_EQ(prev, s.error);
}

TEST(Solve, IsDeterministic) {
  const Solution again = Problem{}.solve();
  const Solution &s = case_i();
  ASSERT_EQ(again.records.size(), s.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    EXPECT_EQ(again.records[i].error, s.records[i].error);
    EXPECT_EQ(again.records[i].J, s.records[i].J);
    EXPECT_EQ(again.records[i].c, s.records[i].c);
  }
  EXPECT_EQ(again.lam0.stacked(), s.lam0.stacked());
  EXPECT_EQ(again.J, s.J);
}

TEST(Solve, SinkSeesEveryRecord) {
  std::vector<ConvergenceRecord> seen;
  Problem p;
  p.cfg.shooting.N = 200;
  const Solution s = p.solve([&](const ConvergenceRecord &r) { seen.push_back(r); });
  ASSERT_EQ(seen.size(), s.records.size());
  for (std::size_t i = 0; i < seen.size(); ++i)
    EXPECT_EQ(seen[i].error, s.records[i].error);
}

TEST(Solve, ReplayedControlsReproduceTrajectory) {
  const Solution &s = case_i();
  const Problem p;
  const auto replay = integrate({p.cfg.boundary.R0, p.cfg.boundary.Pi0},
                                controls_of(s.trajectory), p.cfg.model,
                                p.cfg.input_matrix, p.cfg.shooting.integrator_config());
  ASSERT_EQ(replay.size(), s.trajectory.steps());
  double worst = 0.0;
  for (std::size_t k = 0; k < replay.size(); ++k)
    worst = std::max(worst,
                     state_difference(replay[k].state, s.trajectory.points[k + 1].state)
                         .norm());
  EXPECT_LE(worst, 1e-12);
  const TerminalError e = terminal_error(replay.back().state.R, replay.back().state.Pi,
                                         p.cfg.boundary);
  EXPECT_LE(e.norm, 1e-10);
}

TEST(Solve, RejectsInvalidArmijoParameter) {
  Problem p;
  p.cfg.shooting.alpha = 0.5;
  EXPECT_THROW(p.solve(), Error);
  p.cfg.shooting.alpha = 0.0;
  EXPECT_THROW(p.solve(), Error);
}

TEST(Solve, FailureCarriesBestIterate) {
  Problem p;
  p.cfg.shooting.max_outer = 1;
  try {
    p.solve();
    FAIL() << "expected MaxIterationsExceeded";
  } catch (const MaxIterationsExceeded &e) {
    EXPECT_FALSE(e.best.converged);
    EXPECT_EQ(e.best.outer_iterations, 1);
    EXPECT_TRUE(std::isfinite(e.best.error));
    ASSERT_FALSE(e.best.records.empty());
    EXPECT_LT(e.best.error, e.best.records.front().error);
    EXPECT_EQ(e.best.trajectory.points.size(), p.cfg.shooting.N + 1);
  }
}

TEST(NewtonDirection, SolvesWellConditionedSystem) {
  std::mt19937_64 gen(82);
  Mat6 a = Mat6::Random() + 3.0 * Mat6::Identity();
  Vec6 e;
  e << random_vec(gen), random_vec(gen);
  const auto d = newton_direction(a, e, ShootingConfig{});
  ASSERT_TRUE(d.has_value());
  EXPECT_FALSE(d->least_squares);
  EXPECT_LE((a * d->d - e).norm(), 1e-12);
}

TEST(NewtonDirection, FallsBackToLeastSquaresOnRankDeficiency) {
  Mat6 a = Mat6::Identity();
  a(5, 5) = 0.0;
  Vec6 e = Vec6::Ones();
  const auto d = newton_direction(a, e, ShootingConfig{});
  ASSERT_TRUE(d.has_value());
  EXPECT_TRUE(d->least_squares);
  EXPECT_EQ(d->rank, 5);
  Vec6 expected = Vec6::Ones();
  expected(5) = 0.0;
  EXPECT_LE((d->d - expected).norm(), 1e-14);
}

} // namespace
