#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Discrete necessary conditions for the minimum-effort attitude transfer.
// Along an extremal,
//   u_{k+1} = -B^T lam2_k
//   [lam1_k; lam2_k] = [A^T C^T; B^T D^T]_{k+1} [lam1_{k+1}; lam2_{k+1}]
// with the per-step matrices
//   A_k = F_k^T
//   B_k = h F_k^T (tr(F_k Jd) I - F_k Jd)^{-1}
//   C_k = h Mj_{k+1} F_k^T
//   D_k = F_k^T + S(F_k^T Pi_k) B_k + h Mj_{k+1} B_k
// The multiplier recursion is run forward with a 6x6 solve per step.

#include "so3ocp/integrator.hpp"

#include <vector>

namespace so3ocp {

inline constexpr double kMaxCondition = 1e12;

struct BoundaryConditions {
  Mat3 R0 = Mat3::Identity();
  Vec3 Pi0 = Vec3::Zero();
  Mat3 RNd = Mat3::Identity();
  Vec3 PiNd = Vec3::Zero();

  friend bool operator==(const BoundaryConditions &,
                         const BoundaryConditions &) = default;
};

struct Multipliers {
  Vec3 lam1 = Vec3::Zero(); // attitude
  Vec3 lam2 = Vec3::Zero(); // angular momentum

  Vec6 stacked() const {
    Vec6 v;
    v << lam1, lam2;
    return v;
  }
  static Multipliers from_stacked(const Vec6 &v) {
    return {v.head<3>(), v.tail<3>()};
  }
};

struct StepMatrices {
  Mat3 A = Mat3::Identity();
  Mat3 B = Mat3::Zero();
  Mat3 C = Mat3::Zero();
  Mat3 D = Mat3::Identity();

  /// [[A, B], [C, D]]
  Mat6 block() const {
    Mat6 m;
    m << A, B, C, D;
    return m;
  }
};

struct ExtremalPoint {
  BodyState state;           // (R_k, Pi_k)
  Vec3 f = Vec3::Zero();     // S(f_k) = log F_k
  Mat3 F = Mat3::Identity(); // F_k, solved from Pi_k
  Multipliers mult;          // lam_k
  ControlVec u;              // u_k (zero-length placeholder at k = 0)
  StepMatrices matrices;     // A_k .. D_k
  Mat3 moment_jacobian_next = Mat3::Zero(); // Mj_{k+1} at R_k F_k
};

struct ExtremalTrajectory {
  std::vector<ExtremalPoint> points; // k = 0 .. N
  BoundaryConditions boundary;

  std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
  const ExtremalPoint &terminal() const { return points.back(); }
};

/// Inner matrix tr(F Jd) I - F Jd, LU-factored and checked for conditioning.
inline Eigen::PartialPivLU<Mat3> inner_matrix_lu(const Mat3 &F, const Mat3 &jd) {
  Eigen::PartialPivLU<Mat3> lu(trace_complement(F * jd));
  const double rc = lu.rcond();
  if (!(rc * kMaxCondition >= 1.0)) throw SingularInnerMatrix(1.0 / rc);
  return lu;
}

inline StepMatrices step_matrices(const Mat3 &F, const Vec3 &pi,
                                  const Mat3 &moment_jacobian_next,
                                  const Mat3 &jd, double h) {
  const auto lu = inner_matrix_lu(F, jd);
  const Mat3 ft = F.transpose();
  StepMatrices m;
  m.A = ft;
  m.B = h * ft * lu.inverse();
  m.C = h * moment_jacobian_next * ft;
  m.D = ft + hat(ft * pi) * m.B + h * moment_jacobian_next * m.B;
  return m;
}

/// u = -B^T lam2
inline ControlVec optimal_control(const Vec3 &lam2, const InputMatrix &b) {
  return -b.transpose() * lam2;
}

/// Solves lam_k = (A11_{k+1})^T lam_{k+1} for lam_{k+1}.
inline Multipliers propagate_multipliers(const Multipliers &mult,
                                         const StepMatrices &next) {
  Eigen::PartialPivLU<Mat6> lu(next.block().transpose());
  const double rc = lu.rcond();
  if (!(rc * kMaxCondition >= 1.0)) throw SingularTransition(1.0 / rc);
  return Multipliers::from_stacked(lu.solve(mult.stacked()));
}

namespace detail {

inline ExtremalPoint make_point(const BodyState &state, const Multipliers &mult,
                                ControlVec u, const PotentialModel &model,
                                const IntegratorConfig &cfg) {
  ExtremalPoint p;
  p.state = state;
  const RelativeAttitude rel =
      solve_relative_attitude(state.Pi, model.inertia(), cfg);
  p.f = rel.f;
  p.F = rel.F;
  p.mult = mult;
  p.u = std::move(u);
  p.moment_jacobian_next = model.moment_jacobian(state.R * rel.F);
  p.matrices = step_matrices(p.F, state.Pi, p.moment_jacobian_next,
                             model.inertia().Jd(), cfg.h);
  return p;
}

} // namespace detail

/// Forward map (R_0, Pi_0, lam_0) -> extremal sequence k = 0 .. N.
inline ExtremalTrajectory extremal_sweep(const Multipliers &lam0,
                                         const BoundaryConditions &boundary,
                                         const PotentialModel &model,
                                         const InputMatrix &b,
                                         const IntegratorConfig &cfg,
                                         std::size_t n) {
  ExtremalTrajectory traj;
  traj.boundary = boundary;
  traj.points.reserve(n + 1);
  std::size_t k = 0;
  try {
    traj.points.push_back(detail::make_point({boundary.R0, boundary.Pi0}, lam0,
                                             ControlVec::Zero(b.cols()), model,
                                             cfg));
    for (; k < n; ++k) {
      const ExtremalPoint &cur = traj.points.back();
      ControlVec u = optimal_control(cur.mult.lam2, b);
      const StepResult st = advance(cur.state, {cur.f, cur.F, 0, 0.0}, u, model,
                                    b, cfg.h);
      ExtremalPoint next =
          detail::make_point(st.state, Multipliers{}, std::move(u), model, cfg);
      next.mult = propagate_multipliers(cur.mult, next.matrices);
      traj.points.push_back(std::move(next));
    }
  } catch (const NoConvergence &e) {
    throw e.with_step(static_cast<std::ptrdiff_t>(k));
  } catch (const SingularTransition &e) {
    throw SingularTransition(e.condition, static_cast<std::ptrdiff_t>(k));
  }
  return traj;
}

/// sum_k h/2 |u_{k+1}|^2
inline double performance_index(const ExtremalTrajectory &traj, double h) {
  double j = 0.0;
  for (std::size_t k = 1; k < traj.points.size(); ++k)
    j += 0.5 * h * traj.points[k].u.squaredNorm();
  return j;
}

/// Controls u_1 .. u_N of the sweep.
inline ControlSchedule controls_of(const ExtremalTrajectory &traj) {
  ControlSchedule u;
  for (std::size_t k = 1; k < traj.points.size(); ++k)
    u.push_back(traj.points[k].u);
  return u;
}

} // namespace so3ocp
