#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Exact discrete sensitivities along an extremal. With x_k = [zeta_k; dPi_k]
// and dlam_k = [dlam1_k; dlam2_k]:
//   x_{k+1}  = A11_k x_k + A12_k dlam_k
//   dlam_k   = A21_{k+1} x_{k+1} + A11_{k+1}^T dlam_{k+1}
// which combine into a 12x12 step transition. The product of transitions
// maps [x_0; dlam_0] to [x_N; dlam_N]; its upper-right 6x6 block Phi12 is the
// sensitivity of the terminal state to the initial multipliers.

#include "so3ocp/extremal.hpp"

#include <optional>
#include <vector>

namespace so3ocp {

struct VariationBlocks {
  Mat6 A11 = Mat6::Identity();
  Mat6 A12 = Mat6::Zero();
  Mat6 A21 = Mat6::Zero();
};

/// G(x) = d(B_k^T x) / dPi_k for fixed x.
inline Mat3 input_gain_variation(const Mat3 &F, const Mat3 &jd, const Mat3 &bk,
                                 const Vec3 &x, double h) {
  const Mat3 inner_t = inner_matrix_lu(F, jd).reconstructedMatrix().transpose();
  const Mat3 fjs = F * jd * hat(bk.transpose() * x);
  const Mat3 bracket = trace_complement(fjs) * F * bk + h * F * hat(x) * bk;
  // -(inner)^{-T} bracket
  return -inner_t.partialPivLu().solve(bracket);
}

/// The dPi_k coefficient of d(D_k^T lam2_k).
///   -F S(lam2) B + G({-S(F^T Pi) + h Mj^T} lam2)
///     + B^T {S(lam2)(S(F^T Pi) B + F^T) + h Nt(lam2) B}
inline Mat3 momentum_adjoint_variation(const Mat3 &F, const Vec3 &pi,
                                       const Mat3 &bk, const Vec3 &lam2,
                                       const Mat3 &mj_next,
                                       const Mat3 &nt_next_lam2, const Mat3 &jd,
                                       double h) {
  const Mat3 s_ftpi = hat(F.transpose() * pi);
  const Mat3 s_lam2 = hat(lam2);
  return -F * s_lam2 * bk +
         input_gain_variation(F, jd, bk,
                              (-s_ftpi + h * mj_next.transpose()) * lam2, h) +
         bk.transpose() *
             (s_lam2 * (s_ftpi * bk + F.transpose()) + h * nt_next_lam2 * bk);
}

/// A11_k, A12_k, A21_k at one extremal point.
inline VariationBlocks assemble_blocks(const ExtremalPoint &p,
                                       const PotentialModel &model,
                                       const InputMatrix &b, double h) {
  const Mat3 &F = p.F;
  const Mat3 &A = p.matrices.A;
  const Mat3 &Bk = p.matrices.B;
  const Mat3 &mj = p.moment_jacobian_next;
  const Vec3 &lam1 = p.mult.lam1;
  const Vec3 &lam2 = p.mult.lam2;
  const Mat3 &jd = model.inertia().Jd();
  const Mat3 nt = model.moment_adjoint_derivative(p.state.R * F, lam2);

  VariationBlocks out;
  out.A11 = p.matrices.block();
  out.A12.bottomRightCorner<3, 3>() = -h * b * b.transpose();

  out.A21.topLeftCorner<3, 3>() = h * F * nt * A;
  out.A21.topRightCorner<3, 3>() =
      -F * hat(lam1) * Bk +
      h * F * (-hat(mj.transpose() * lam2) * Bk + nt * Bk);
  out.A21.bottomLeftCorner<3, 3>() = h * Bk.transpose() * nt * A;
  out.A21.bottomRightCorner<3, 3>() =
      input_gain_variation(F, jd, Bk, lam1, h) +
      momentum_adjoint_variation(F, p.state.Pi, Bk, lam2, mj, nt, jd, h);
  return out;
}

/// [[A11_k, A12_k],
///  [-(A11_{k+1})^{-T} A21_{k+1} A11_k, (A11_{k+1})^{-T} (I - A21_{k+1} A12_k)]]
inline Mat12 step_transition(const VariationBlocks &cur,
                             const VariationBlocks &next) {
  Eigen::PartialPivLU<Mat6> lu(next.A11.transpose());
  const double rc = lu.rcond();
  if (!(rc * kMaxCondition >= 1.0)) throw SingularTransition(1.0 / rc);

  Eigen::Matrix<double, 6, 12> rhs;
  rhs.leftCols<6>() = -next.A21 * cur.A11;
  rhs.rightCols<6>() = Mat6::Identity() - next.A21 * cur.A12;

  Mat12 t;
  t.topLeftCorner<6, 6>() = cur.A11;
  t.topRightCorner<6, 6>() = cur.A12;
  t.bottomRows<6>() = lu.solve(rhs);
  return t;
}

struct TransitionAccumulator {
  Mat12 Phi = Mat12::Identity();
  std::vector<Mat12> transitions; // filled only when requested

  Mat6 Phi11() const { return Phi.topLeftCorner<6, 6>(); }
  Mat6 Phi12() const { return Phi.topRightCorner<6, 6>(); }
  Mat6 Phi21() const { return Phi.bottomLeftCorner<6, 6>(); }
  Mat6 Phi22() const { return Phi.bottomRightCorner<6, 6>(); }
};

/// Ordered product T_{N-1} ... T_0 along the trajectory.
inline TransitionAccumulator accumulate_phi(const ExtremalTrajectory &traj,
                                            const PotentialModel &model,
                                            const InputMatrix &b, double h,
                                            bool store_transitions = false) {
  TransitionAccumulator acc;
  const std::size_t n = traj.steps();
  if (n == 0) return acc;
  VariationBlocks cur = assemble_blocks(traj.points[0], model, b, h);
  for (std::size_t k = 0; k < n; ++k) {
    VariationBlocks next = assemble_blocks(traj.points[k + 1], model, b, h);
    Mat12 t;
    try {
      t = step_transition(cur, next);
    } catch (const SingularTransition &e) {
      throw SingularTransition(e.condition, static_cast<std::ptrdiff_t>(k));
    }
    acc.Phi = t * acc.Phi;
    if (store_transitions) acc.transitions.push_back(t);
    cur = std::move(next);
  }
  return acc;
}

} // namespace so3ocp
