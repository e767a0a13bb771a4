#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Neighboring-extremal shooting on the initial multipliers. Each outer
// iteration takes the Newton direction D = Phi12^{-1} from the exact
// sensitivities and backtracks on the scale c until the terminal error
// satisfies Error_t <= (1 - 2 alpha c) Error.

#include "so3ocp/sensitivity.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace so3ocp {

struct TerminalError {
  Vec3 zeta = Vec3::Zero(); // vee(log(R_N^T R_N^d))
  Vec3 dPi = Vec3::Zero();  // Pi_N^d - Pi_N
  double norm = 0.0;

  Vec6 stacked() const {
    Vec6 v;
    v << zeta, dPi;
    return v;
  }
};

inline TerminalError terminal_error(const Mat3 &rn, const Vec3 &pin,
                                    const BoundaryConditions &bc) {
  TerminalError e;
  e.zeta = log_so3(rn.transpose() * bc.RNd);
  e.dPi = bc.PiNd - pin;
  e.norm = e.stacked().norm();
  return e;
}

enum class Lam0Policy {
  RandomUniform, // components uniform in [-lam0_scale, lam0_scale]
  Zero,
  Explicit,
};

struct ShootingConfig {
  double h = 1e-3;
  std::size_t N = 1000;
  /// Stopping threshold on the terminal error; unset means
  /// 1e-12 (1 + |Pi_N^d|).
  std::optional<double> eps_stop;
  double alpha = 1e-4;
  double c_min = 1e-10;
  int max_outer = 200;
  int max_backtrack = 40;
  Lam0Policy lam0_init = Lam0Policy::RandomUniform;
  double lam0_scale = 1e-3;
  Vec6 lam0_explicit = Vec6::Zero();
  std::uint64_t seed = 1;
  /// Phi12 is inverted directly up to this condition number.
  double max_direct_condition = 1e12;
  /// Relative singular value cutoff of the least-squares fallback.
  double pinv_rcond = 1e-6;
  IntegratorConfig integrator{};

  IntegratorConfig integrator_config() const {
    IntegratorConfig c = integrator;
    c.h = h;
    return c;
  }
  double stop_threshold(const BoundaryConditions &bc) const {
    return eps_stop ? *eps_stop : 1e-12 * (1.0 + bc.PiNd.norm());
  }
};

struct ConvergenceRecord {
  int outer = 0;       // i; 0 is the initial guess
  int inner_trial = 0; // 0 for the initial guess, 1.. for line-search trials
  double c = 0.0;
  double error = 0.0;  // +inf when the trial sweep broke down
  double J = 0.0;
  bool accepted = false;
  bool least_squares = false; // direction came from the fallback
};

struct Solution {
  Multipliers lam0;
  ExtremalTrajectory trajectory;
  double J = 0.0;
  double terminal_attitude_violation = 0.0; // |log(R_N^d^T R_N)|
  double terminal_momentum_violation = 0.0; // |Pi_N^d - Pi_N|
  double error = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  std::vector<ConvergenceRecord> records;
};

/// Thrown when shooting fails; carries the best iterate found.
class ShootingFailure : public Error {
public:
  ShootingFailure(const std::string &what, Solution best)
      : Error(what), best(std::move(best)) {}
  Solution best;
};

class SingularPhi12 : public ShootingFailure {
public:
  using ShootingFailure::ShootingFailure;
};
class LineSearchStalled : public ShootingFailure {
public:
  using ShootingFailure::ShootingFailure;
};
class MaxIterationsExceeded : public ShootingFailure {
public:
  using ShootingFailure::ShootingFailure;
};

/// Initial multiplier guess according to the configured policy.
inline Multipliers initial_multipliers(const ShootingConfig &cfg) {
  switch (cfg.lam0_init) {
  case Lam0Policy::Zero:
    return {};
  case Lam0Policy::Explicit:
    return Multipliers::from_stacked(cfg.lam0_explicit);
  case Lam0Policy::RandomUniform:
    break;
  }
  // Mapped by hand from raw 64-bit draws so the sequence does not depend on
  // the standard library's distribution implementation.
  std::mt19937_64 gen(cfg.seed);
  Vec6 v;
  for (int i = 0; i < 6; ++i) {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    v(i) = cfg.lam0_scale * (2.0 * unit - 1.0);
  }
  return Multipliers::from_stacked(v);
}

struct NewtonDirection {
  Vec6 d = Vec6::Zero();
  double condition = 0.0;
  bool least_squares = false;
  int rank = 6;
};

/// D e with D = Phi12^{-1}; minimum-norm least squares on a truncated SVD
/// when Phi12 is too ill-conditioned to invert.
inline std::optional<NewtonDirection>
newton_direction(const Mat6 &phi12, const Vec6 &e, const ShootingConfig &cfg,
                 double rcond) {
  if (!phi12.allFinite()) return std::nullopt;
  Eigen::JacobiSVD<Mat6> svd(phi12, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec6 &s = svd.singularValues();
  if (!(s(0) > 0.0)) return std::nullopt;
  NewtonDirection out;
  out.condition = s(5) > 0.0 ? s(0) / s(5) : std::numeric_limits<double>::infinity();
  if (out.condition <= cfg.max_direct_condition) {
    out.d = phi12.partialPivLu().solve(e);
    return out;
  }
  out.least_squares = true;
  const Vec6 ute = svd.matrixU().transpose() * e;
  Vec6 y = Vec6::Zero();
  out.rank = 0;
  for (int i = 0; i < 6; ++i) {
    if (s(i) > rcond * s(0)) {
      y(i) = ute(i) / s(i);
      ++out.rank;
    }
  }
  out.d = svd.matrixV() * y;
  return out;
}

inline std::optional<NewtonDirection>
newton_direction(const Mat6 &phi12, const Vec6 &e, const ShootingConfig &cfg) {
  return newton_direction(phi12, e, cfg, cfg.pinv_rcond);
}

using RecordSink = std::function<void(const ConvergenceRecord &)>;

namespace detail {

struct Evaluation {
  ExtremalTrajectory traj;
  TerminalError err;
  double J = 0.0;
};

inline std::optional<Evaluation> evaluate(const Multipliers &lam0,
                                          const BoundaryConditions &bc,
                                          const PotentialModel &model,
                                          const InputMatrix &b,
                                          const ShootingConfig &cfg) {
  try {
    Evaluation ev;
    ev.traj = extremal_sweep(lam0, bc, model, b, cfg.integrator_config(), cfg.N);
    const auto &end = ev.traj.terminal().state;
    ev.err = terminal_error(end.R, end.Pi, bc);
    ev.J = performance_index(ev.traj, cfg.h);
    if (!std::isfinite(ev.err.norm) || !std::isfinite(ev.J)) return std::nullopt;
    return ev;
  } catch (const NoConvergence &) {
  } catch (const SingularTransition &) {
  } catch (const SingularInnerMatrix &) {
  }
  return std::nullopt;
}

inline void finalize(Solution &s, Evaluation ev, const Multipliers &lam0,
                     const BoundaryConditions &bc) {
  const auto &end = ev.traj.terminal().state;
  s.lam0 = lam0;
  s.J = ev.J;
  s.error = ev.err.norm;
  s.terminal_attitude_violation = log_so3(bc.RNd.transpose() * end.R).norm();
  s.terminal_momentum_violation = (bc.PiNd - end.Pi).norm();
  s.trajectory = std::move(ev.traj);
}

} // namespace detail

inline Solution solve(const BoundaryConditions &bc, const PotentialModel &model,
                      const InputMatrix &b, const ShootingConfig &cfg,
                      const RecordSink &sink = {}) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5))
    throw Error("Armijo parameter must lie in (0, 1/2)");
  const double eps_stop = cfg.stop_threshold(bc);
  if (!(eps_stop > 0.0)) throw Error("stopping threshold must be positive");

  auto emit = [&](Solution &s, const ConvergenceRecord &r) {
    s.records.push_back(r);
    if (sink) sink(r);
  };

  Solution sol;
  Multipliers lam0 = initial_multipliers(cfg);
  auto first = detail::evaluate(lam0, bc, model, b, cfg);
  if (!first) throw Error("extremal sweep failed for the initial multiplier guess");
  double error = first->err.norm;
  emit(sol, {0, 0, 0.0, error, first->J, true, false});
  detail::Evaluation current = std::move(*first);

  int outer = 0;
  while (error > eps_stop) {
    if (outer >= cfg.max_outer) {
      detail::finalize(sol, std::move(current), lam0, bc);
      sol.outer_iterations = outer;
      throw MaxIterationsExceeded("shooting did not converge in " +
                                      std::to_string(cfg.max_outer) +
                                      " outer iterations",
                                  std::move(sol));
    }
    ++outer;

    std::optional<NewtonDirection> dir;
    try {
      const Mat6 phi12 =
          accumulate_phi(current.traj, model, b, cfg.h).Phi12();
      dir = newton_direction(phi12, current.err.stacked(), cfg);
    } catch (const SingularTransition &) {
    } catch (const SingularInnerMatrix &) {
    }
    if (!dir || dir->rank == 0) {
      detail::finalize(sol, std::move(current), lam0, bc);
      sol.outer_iterations = outer;
      throw SingularPhi12("terminal sensitivity Phi12 is degenerate",
                          std::move(sol));
    }

    double c = 1.0;
    int trial = 0;
    while (true) {
      if (c < cfg.c_min || trial >= cfg.max_backtrack) {
        detail::finalize(sol, std::move(current), lam0, bc);
        sol.outer_iterations = outer;
        throw LineSearchStalled("line search stalled at outer iteration " +
                                    std::to_string(outer),
                                std::move(sol));
      }
      ++trial;
      const Multipliers lam_t =
          Multipliers::from_stacked(lam0.stacked() + c * dir->d);
      auto ev = detail::evaluate(lam_t, bc, model, b, cfg);
      const double err_t =
          ev ? ev->err.norm : std::numeric_limits<double>::infinity();
      const bool accept = err_t <= (1.0 - 2.0 * cfg.alpha * c) * error;
      emit(sol, {outer, trial, c, err_t,
                 ev ? ev->J : std::numeric_limits<double>::quiet_NaN(), accept,
                 dir->least_squares});
      if (accept) {
        lam0 = lam_t;
        error = err_t;
        current = std::move(*ev);
        break;
      }
      c *= 0.5;
    }
  }

  detail::finalize(sol, std::move(current), lam0, bc);
  sol.outer_iterations = outer;
  sol.converged = true;
  return sol;
}

} // namespace so3ocp
