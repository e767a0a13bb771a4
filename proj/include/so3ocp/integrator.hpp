#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Controlled Lie group variational integrator in Hamiltonian form:
//   h S(Pi_k) = F_k Jd - Jd F_k^T
//   R_{k+1}   = R_k F_k
//   Pi_{k+1}  = F_k^T Pi_k + h (M_{k+1} + B u_{k+1})
// The attitude is advanced by a group product, so R stays on SO(3) without
// reprojection.

#include "so3ocp/potential.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace so3ocp {

struct IntegratorConfig {
  double h = 1e-3;
  double newton_tol_rel = 1e-14; // relative to ||h Pi||
  double newton_tol_abs = 1e-15;
  int newton_max_iter = 50;
  /// Central-difference Jacobian instead of the analytic one.
  bool fd_jacobian = false;
};

struct BodyState {
  Mat3 R = Mat3::Identity();
  Vec3 Pi = Vec3::Zero();
};

struct RelativeAttitude {
  Vec3 f = Vec3::Zero(); // S(f) = log(F)
  Mat3 F = Mat3::Identity();
  int iterations = 0;
  double residual = 0.0;
};

struct StepResult {
  BodyState state; // (R_{k+1}, Pi_{k+1})
  Vec3 f = Vec3::Zero();
  Mat3 F = Mat3::Identity(); // R_k^T R_{k+1}
  Vec3 moment = Vec3::Zero(); // M_{k+1}
};

/// One control vector per step: entry k-1 holds u_k, applied over step k-1
/// (it enters Pi_k). There is no u_0.
using ControlSchedule = std::vector<ControlVec>;

namespace detail {

/// vee(F Jd - Jd F^T) for F = exp(S(f)).
inline Vec3 implicit_map(const Vec3 &f, const Mat3 &jd) {
  const Mat3 F = exp_so3(f);
  const Mat3 a = F * jd;
  const Mat3 s = a - a.transpose();
  return {0.5 * (s(2, 1) - s(1, 2)), 0.5 * (s(0, 2) - s(2, 0)),
          0.5 * (s(1, 0) - s(0, 1))};
}

// With G(f) = vee(F Jd - Jd F^T) = a(t) J f + b(t) f x J f, t = |f|,
// a = sin t / t and b = (1 - cos t)/t^2.
inline Mat3 implicit_map_jacobian(const Vec3 &f, const Mat3 &j) {
  const double t = f.norm();
  double a, b, da, db; // da = a'(t)/t, db = b'(t)/t
  if (t < 1e-4) {
    const double t2 = t * t;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    da = -1.0 / 3.0 + t2 / 30.0;
    db = -1.0 / 12.0 + t2 / 180.0;
  } else {
    const double s = std::sin(t), c = std::cos(t), h = std::sin(0.5 * t);
    const double one_minus_c = 2.0 * h * h;
    a = s / t;
    b = one_minus_c / (t * t);
    da = (t * c - s) / (t * t * t);
    db = (t * s - 2.0 * one_minus_c) / (t * t * t * t);
  }
  const Vec3 jf = j * f;
  return da * jf * f.transpose() + a * j +
         db * f.cross(jf) * f.transpose() + b * (hat(f) * j - hat(jf));
}

inline Mat3 implicit_map_fd_jacobian(const Vec3 &f, const Mat3 &jd) {
  Mat3 g;
  const double eps = 1e-7;
  for (int i = 0; i < 3; ++i) {
    Vec3 d = Vec3::Zero();
    d(i) = eps;
    g.col(i) = (implicit_map(f + d, jd) - implicit_map(f - d, jd)) / (2 * eps);
  }
  return g;
}

} // namespace detail

/// Solves h S(Pi) = F Jd - Jd F^T for F = exp(S(f)) by Newton iteration
/// started at f = h J^{-1} Pi.
inline RelativeAttitude solve_relative_attitude(const Vec3 &pi,
                                                const InertiaPair &inertia,
                                                const IntegratorConfig &cfg) {
  const Vec3 target = cfg.h * pi;
  const double tol = cfg.newton_tol_rel * target.norm() + cfg.newton_tol_abs;
  RelativeAttitude out;
  Vec3 f = cfg.h * (inertia.J_inverse() * pi);
  Vec3 r = target - detail::implicit_map(f, inertia.Jd());
  double res = r.norm();
  int it = 0;
  while (!(res <= tol)) {
    if (it >= cfg.newton_max_iter || !std::isfinite(res))
      throw NoConvergence(it, res);
    const Mat3 jac = cfg.fd_jacobian
                         ? detail::implicit_map_fd_jacobian(f, inertia.Jd())
                         : detail::implicit_map_jacobian(f, inertia.J());
    const Vec3 df = jac.partialPivLu().solve(r);
    f += df;
    ++it;
    r = target - detail::implicit_map(f, inertia.Jd());
    res = r.norm();
    // Rounding floor: the update no longer changes f.
    if (df.norm() <= 4.0 * std::numeric_limits<double>::epsilon() * f.norm() &&
        res <= 1e3 * tol)
      break;
  }
  if (it > 0 || res > 0.0) {
    // One polishing update past the tolerance.
    const Mat3 jac = cfg.fd_jacobian
                         ? detail::implicit_map_fd_jacobian(f, inertia.Jd())
                         : detail::implicit_map_jacobian(f, inertia.J());
    const Vec3 fp = f + jac.partialPivLu().solve(r);
    const Vec3 rp = target - detail::implicit_map(fp, inertia.Jd());
    if (rp.norm() <= res) {
      f = fp;
      res = rp.norm();
    }
  }
  out.f = f;
  out.F = exp_so3(f);
  out.iterations = it;
  out.residual = res;
  return out;
}

/// Explicit part of the step, given the already solved relative attitude.
inline StepResult advance(const BodyState &state, const RelativeAttitude &rel,
                          const ControlVec &u_next, const PotentialModel &model,
                          const InputMatrix &b, double h) {
  if (u_next.size() != b.cols())
    throw Error("control dimension does not match the input matrix");
  StepResult out;
  out.f = rel.f;
  out.F = rel.F;
  out.state.R = state.R * rel.F;
  out.moment = model.moment(out.state.R);
  out.state.Pi = rel.F.transpose() * state.Pi + h * (out.moment + b * u_next);
  return out;
}

/// Applies u_{k+1} = u_next over one step from state (R_k, Pi_k).
inline StepResult step(const BodyState &state, const ControlVec &u_next,
                       const PotentialModel &model, const InputMatrix &b,
                       const IntegratorConfig &cfg) {
  if (u_next.size() != b.cols())
    throw Error("control dimension does not match the input matrix");
  return advance(state, solve_relative_attitude(state.Pi, model.inertia(), cfg),
                 u_next, model, b, cfg.h);
}

/// Repeated steps; controls[k] is u_{k+1}.
inline std::vector<StepResult> integrate(const BodyState &state0,
                                         const ControlSchedule &controls,
                                         const PotentialModel &model,
                                         const InputMatrix &b,
                                         const IntegratorConfig &cfg) {
  std::vector<StepResult> out;
  out.reserve(controls.size());
  BodyState s = state0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    try {
      out.push_back(step(s, controls[k], model, b, cfg));
    } catch (const NoConvergence &e) {
      throw e.with_step(static_cast<std::ptrdiff_t>(k));
    }
    s = out.back().state;
  }
  return out;
}

/// Zero-control schedule of length n.
inline ControlSchedule zero_controls(std::size_t n, Eigen::Index m) {
  return ControlSchedule(n, ControlVec::Zero(m));
}

/// 1/2 Pi^T J^{-1} Pi + U(R)
inline double total_energy(const BodyState &state, const PotentialModel &model) {
  return 0.5 * state.Pi.dot(model.inertia().J_inverse() * state.Pi) +
         model.potential(state.R);
}

/// Body angular velocity J^{-1} Pi.
inline Vec3 angular_velocity(const BodyState &state, const InertiaPair &inertia) {
  return inertia.J_inverse() * state.Pi;
}

} // namespace so3ocp
