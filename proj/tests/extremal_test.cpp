//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace so3ocp;
using namespace so3ocp::testing;

namespace {

IntegratorConfig with_step(double h) {
  IntegratorConfig c;
  c.h = h;
  return c;
}

Multipliers random_multipliers(std::mt19937_64 &gen, double scale) {
  return {random_vec(gen, scale), random_vec(gen, scale)};
}

TEST(StepMatrices, IdentityStep) {
  const InertiaPair j(Vec3(0.156, 0.156, 0.3).asDiagonal());
  const double h = 1e-3;
  const StepMatrices m =
      step_matrices(Mat3::Identity(), Vec3::Zero(), Mat3::Zero(), j.Jd(), h);
  EXPECT_EQ(m.A, Mat3::Identity());
  EXPECT_LE((m.B - h * j.J_inverse()).norm(), 1e-15);
  EXPECT_EQ(m.C, Mat3::Zero());
  EXPECT_LE((m.D - Mat3::Identity()).norm(), 0.0);
}

TEST(StepMatrices, FirstBlockIsOrthogonal) {
  std::mt19937_64 gen(51);
  const InertiaPair j(Vec3(1, 2.8, 2).asDiagonal());
  const auto rel = solve_relative_attitude(random_vec(gen, 3.0), j, with_step(1e-2));
  const StepMatrices m = step_matrices(rel.F, random_vec(gen), Mat3::Zero(), j.Jd(), 1e-2);
  EXPECT_LE(orthonormality_defect(m.A), 1e-15);
}

TEST(StepMatrices, MomentumBlockIsDerivativeOfImplicitSolve) {
  std::mt19937_64 gen(52);
  for (const Mat3 &jm : {Mat3(Vec3(0.156, 0.156, 0.3).asDiagonal()),
                         Mat3(Vec3(1, 2.8, 2).asDiagonal())}) {
    const InertiaPair j(jm);
    const double h = 1e-2;
    const Vec3 pi = random_vec(gen, 5.0);
    const auto base = solve_relative_attitude(pi, j, with_step(h));
    const StepMatrices m = step_matrices(base.F, pi, Mat3::Zero(), j.Jd(), h);
    const Mat3 fd = fd_on_vec(
        [&](const Vec3 &p) {
          const auto r = solve_relative_attitude(p, j, with_step(h));
          return log_so3(base.F.transpose() * r.F);
        },
        pi);
    EXPECT_LE((m.B - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(StepMatrices, BlocksAreDerivativesOfTheStepMap) {
  std::mt19937_64 gen(53);
  const PotentialModel p = pendulum();
  const InputMatrix b = pendulum_input();
  const double h = 1e-3;
  const BodyState s{random_rotation(gen), random_vec(gen, 0.5)};
  const ControlVec u = random_vec(gen).head<2>();
  const auto nominal = step(s, u, p, b, with_step(h));
  const StepMatrices m = step_matrices(nominal.F, s.Pi,
                                       p.moment_jacobian(nominal.state.R),
                                       p.inertia().Jd(), h);
  auto attitude = [&](const BodyState &x) {
    return log_so3(nominal.state.R.transpose() * step(x, u, p, b, with_step(h)).state.R);
  };
  auto momentum = [&](const BodyState &x) {
    return Vec3(step(x, u, p, b, with_step(h)).state.Pi);
  };
  const Mat3 dr_dzeta = fd_on_vec(
      [&](const Vec3 &z) { return attitude({s.R * exp_so3(z), s.Pi}); }, Vec3::Zero());
  const Mat3 dr_dpi = fd_on_vec(
      [&](const Vec3 &q) { return attitude({s.R, q}); }, s.Pi);
  const Mat3 dp_dzeta = fd_on_vec(
      [&](const Vec3 &z) { return momentum({s.R * exp_so3(z), s.Pi}); }, Vec3::Zero());
  const Mat3 dp_dpi = fd_on_vec([&](const Vec3 &q) { return momentum({s.R, q}); }, s.Pi);
  EXPECT_LE((m.A - dr_dzeta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((m.B - dr_dpi).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((m.C - dp_dzeta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((m.D - dp_dpi).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(StepMatrices, SingularInnerMatrixIsReported) {
  // quarter turn about the flat axis zeroes the last row
  const Mat3 jd = Vec3(1.0, 1.0, 0.0).asDiagonal();
  const Mat3 f = exp_so3(Vec3(0, 0, std::numbers::pi / 2));
  EXPECT_THROW(inner_matrix_lu(f, jd), SingularInnerMatrix);
}

TEST(OptimalControl, Examples) {
  EXPECT_EQ(optimal_control(Vec3::Zero(), pendulum_input()), ControlVec::Zero(2));
  const ControlVec u = optimal_control(Vec3(0.5, -2.0, 7.0), pendulum_input());
  ASSERT_EQ(u.size(), 2);
  EXPECT_EQ(u(0), -0.5);
  EXPECT_EQ(u(1), 2.0);
  const ControlVec v = optimal_control(Vec3(1, 2, 3), InputMatrix::Identity(3, 3));
  EXPECT_EQ(v, Vec3(-1, -2, -3));
}

TEST(Multipliers, IdentityBlocksLeaveMultipliersUnchanged) {
  std::mt19937_64 gen(54);
  const Multipliers m = random_multipliers(gen, 3.0);
  const Multipliers n = propagate_multipliers(m, StepMatrices{});
  EXPECT_LE((n.stacked() - m.stacked()).norm(), 0.0);
}

TEST(Multipliers, RoundTripThroughBackwardRecursion) {
  std::mt19937_64 gen(55);
  const PotentialModel p = pendulum();
  const double h = 1e-3;
  for (int n = 0; n < 20; ++n) {
    const BodyState s{random_rotation(gen), random_vec(gen, 0.5)};
    const auto rel = solve_relative_attitude(s.Pi, p.inertia(), with_step(h));
    const StepMatrices next = step_matrices(
        rel.F, s.Pi, p.moment_jacobian(s.R * rel.F), p.inertia().Jd(), h);
    const Multipliers lam = random_multipliers(gen, 5.0);
    const Multipliers lam_next = propagate_multipliers(lam, next);
    EXPECT_LE((next.block().transpose() * lam_next.stacked() - lam.stacked()).norm(),
              1e-12);
  }
}

TEST(Multipliers, FreeBodyMatchesDenseInverse) {
  std::mt19937_64 gen(56);
  const InertiaPair j(Vec3(1, 2.8, 2).asDiagonal());
  const double h = 1e-2;
  const auto rel = solve_relative_attitude(random_vec(gen, 3.0), j, with_step(h));
  const StepMatrices next = step_matrices(rel.F, random_vec(gen, 3.0), Mat3::Zero(),
                                          j.Jd(), h);
  const Multipliers lam = random_multipliers(gen, 2.0);
  const Vec6 oracle = next.block().transpose().inverse() * lam.stacked();
  EXPECT_LE((propagate_multipliers(lam, next).stacked() - oracle).norm(), 1e-12);
  // Without a potential the attitude multiplier only rotates.
  EXPECT_LE((propagate_multipliers(lam, next).lam1 - rel.F.transpose() * lam.lam1).norm(),
            1e-12);
}

TEST(Sweep, ZeroMultipliersReproduceUncontrolledMotion) {
  std::mt19937_64 gen(57);
  const PotentialModel p = pendulum();
  const InputMatrix b = pendulum_input();
  BoundaryConditions bc;
  bc.R0 = random_rotation(gen);
  bc.Pi0 = random_vec(gen, 0.3);
  const auto traj = extremal_sweep({}, bc, p, b, with_step(1e-3), 200);
  const auto free = integrate({bc.R0, bc.Pi0}, zero_controls(200, 2), p, b,
                              with_step(1e-3));
  ASSERT_EQ(traj.points.size(), 201u);
  EXPECT_EQ(traj.points[0].state.R, bc.R0);
  for (std::size_t k = 1; k <= 200; ++k) {
    EXPECT_EQ(traj.points[k].u, ControlVec::Zero(2));
    EXPECT_EQ(traj.points[k].state.R, free[k - 1].state.R);
    EXPECT_EQ(traj.points[k].state.Pi, free[k - 1].state.Pi);
  }
  EXPECT_EQ(performance_index(traj, 1e-3), 0.0);
}

TEST(Sweep, ControlsFollowMultipliersExactly) {
  std::mt19937_64 gen(58);
  const PotentialModel p = pendulum();
  const InputMatrix b = pendulum_input();
  const auto traj = extremal_sweep(random_multipliers(gen, 0.5), {}, p, b,
                                   with_step(1e-3), 300);
  for (std::size_t k = 1; k < traj.points.size(); ++k)
    ASSERT_EQ(traj.points[k].u, optimal_control(traj.points[k - 1].mult.lam2, b));
}

TEST(Sweep, BackwardRecursionResidual) {
  std::mt19937_64 gen(59);
  const PotentialModel s = SpacecraftModel{};
  const auto traj = extremal_sweep(random_multipliers(gen, 0.5), {}, s,
                                   InputMatrix::Identity(3, 3), with_step(1e-3), 500);
  for (std::size_t k = 0; k + 1 < traj.points.size(); ++k) {
    const auto &cur = traj.points[k], &next = traj.points[k + 1];
    ASSERT_LE((next.matrices.block().transpose() * next.mult.stacked() -
               cur.mult.stacked())
                  .norm(),
              1e-11 * std::max(1.0, cur.mult.stacked().norm()));
  }
}

TEST(Sweep, StoredStepMatricesMatchRecomputation) {
  std::mt19937_64 gen(60);
  const PotentialModel p = pendulum();
  const double h = 1e-3;
  const auto traj = extremal_sweep(random_multipliers(gen, 0.5), {}, p,
                                   pendulum_input(), with_step(h), 50);
  for (const auto &pt : traj.points) {
    const StepMatrices m = step_matrices(pt.F, pt.state.Pi,
                                         p.moment_jacobian(pt.state.R * pt.F),
                                         p.inertia().Jd(), h);
    EXPECT_EQ(m.block(), pt.matrices.block());
  }
}

TEST(Sweep, DualPairingIsConstant) {
  // lam_k . x_{k+1} with x_{k+1} = A_k x_k
  std::mt19937_64 gen(61);
  const PotentialModel s = SpacecraftModel{};
  const auto traj = extremal_sweep(random_multipliers(gen, 0.5), {}, s,
                                   InputMatrix::Identity(3, 3), with_step(1e-3), 200);
  Vec6 x;
  x << random_vec(gen), random_vec(gen);
  const double pairing0 = traj.points[0].mult.stacked().dot(x);
  for (std::size_t k = 1; k + 1 < traj.points.size(); ++k) {
    x = traj.points[k].matrices.block() * x;
    const double pairing = traj.points[k].mult.stacked().dot(x);
    ASSERT_NEAR(pairing, pairing0, 1e-9 * std::max(1.0, std::abs(pairing0)));
  }
}

TEST(Sweep, TagsFailuresWithStepIndex) {
  IntegratorConfig c = with_step(0.2);
  c.newton_max_iter = 1;
  Multipliers lam;
  lam.lam2 = Vec3(0, -500, 0);
  try {
    extremal_sweep(lam, {}, FreeBodyModel{InertiaPair(Vec3(1, 2.8, 2).asDiagonal())},
                   InputMatrix::Identity(3, 3), c, 5);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence &e) {
    EXPECT_EQ(e.step_index, 0);
  }
}

} // namespace
