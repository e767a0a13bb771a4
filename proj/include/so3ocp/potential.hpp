#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Attitude-dependent potentials. Every model supplies four quantities:
//   U(R)         potential energy
//   M(R)         moment, S(M) = dU/dR^T R - R^T dU/dR
//   Mj(R)        moment Jacobian, dM = Mj zeta for dR = R S(zeta)
//   Nt(R, x)     adjoint derivative, d(Mj^T x) = Nt(R, x) zeta
// Models are immutable value types; PotentialModel dispatches over them.

#include "so3ocp/so3.hpp"

#include <string>
#include <variant>

namespace so3ocp {

/// Standard inertia J together with the nonstandard inertia Jd = tr(J)/2 I - J
/// that appears in the discrete kinetic energy.
class InertiaPair {
public:
  explicit InertiaPair(const Mat3 &j) : j_(j) {
    if ((j - j.transpose()).norm() > 1e-12 * std::max(1.0, j.norm()))
      throw NotSymmetric();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(j, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) throw NotPositiveDefinite();
    jd_ = 0.5 * j.trace() * Mat3::Identity() - j;
    j_inv_ = j.inverse();
  }

  const Mat3 &J() const { return j_; }
  const Mat3 &Jd() const { return jd_; }
  const Mat3 &J_inverse() const { return j_inv_; }

  friend bool operator==(const InertiaPair &a, const InertiaPair &b) {
    return a.j_ == b.j_;
  }

private:
  Mat3 j_;
  Mat3 jd_;
  Mat3 j_inv_;
};

inline InertiaPair nonstandard_inertia(const Mat3 &j) { return InertiaPair(j); }

inline const Vec3 kE3 = Vec3::UnitZ();

/// Rigid body on a frictionless pivot under uniform gravity along e3.
/// U = -m g e3^T R rho.
struct PendulumModel {
  double mass = 1.0;
  double gravity = 9.81;
  Vec3 rho = Vec3(0.0, 0.0, 0.75);
  InertiaPair inertia = InertiaPair(Eigen::Vector3d(0.156, 0.156, 0.3).asDiagonal());

  double potential(const Mat3 &r) const {
    return -mass * gravity * kE3.dot(r * rho);
  }
  Vec3 moment(const Mat3 &r) const {
    return mass * gravity * rho.cross(r.transpose() * kE3);
  }
  Mat3 moment_jacobian(const Mat3 &r) const {
    return mass * gravity * hat(rho) * hat(r.transpose() * kE3);
  }
  Mat3 moment_adjoint_derivative(const Mat3 &r, const Vec3 &x) const {
    return -mass * gravity * hat(hat(rho) * x) * hat(r.transpose() * kE3);
  }
  /// dU/dR as a 3x3 matrix.
  Mat3 potential_gradient(const Mat3 & /*r*/) const {
    return -mass * gravity * kE3 * rho.transpose();
  }

  friend bool operator==(const PendulumModel &a, const PendulumModel &b) {
    return a.mass == b.mass && a.gravity == b.gravity && a.rho == b.rho &&
           a.inertia == b.inertia;
  }
};

/// Rigid spacecraft on a circular orbit with gravity gradient, attitude
/// relative to the LVLH frame, normalized units. The constant -GM/r0 term of
/// the potential is dropped.
struct SpacecraftModel {
  double omega0 = 1.0;
  InertiaPair inertia = InertiaPair(Eigen::Vector3d(1.0, 2.8, 2.0).asDiagonal());

  double potential(const Mat3 &r) const {
    const Mat3 &j = inertia.J();
    const Vec3 v = r.transpose() * kE3;
    return -0.5 * omega0 * omega0 * (j.trace() - 3.0 * v.dot(j * v));
  }
  Vec3 moment(const Mat3 &r) const {
    const Vec3 v = r.transpose() * kE3;
    return 3.0 * omega0 * omega0 * v.cross(inertia.J() * v);
  }
  Mat3 moment_jacobian(const Mat3 &r) const {
    const Mat3 &j = inertia.J();
    const Vec3 v = r.transpose() * kE3;
    const Mat3 sv = hat(v);
    return 3.0 * omega0 * omega0 * (-hat(j * v) * sv + sv * j * sv);
  }
  // Mj^T x = 3 w0^2 [-S(v) S(Jv) x + S(v) J S(v) x] with v = R^T e3 and
  // dv = S(v) zeta; the product rule gives the four terms below.
  Mat3 moment_adjoint_derivative(const Mat3 &r, const Vec3 &x) const {
    const Mat3 &j = inertia.J();
    const Vec3 v = r.transpose() * kE3;
    const Mat3 sv = hat(v);
    const Mat3 sx = hat(x);
    return 3.0 * omega0 * omega0 *
           (hat(hat(j * v) * x) * sv + sv * sx * j * sv -
            hat(j * sv * x) * sv - sv * j * sx * sv);
  }
  Mat3 potential_gradient(const Mat3 &r) const {
    return 3.0 * omega0 * omega0 * kE3 * kE3.transpose() * r * inertia.J();
  }

  friend bool operator==(const SpacecraftModel &a, const SpacecraftModel &b) {
    return a.omega0 == b.omega0 && a.inertia == b.inertia;
  }
};

/// Rigid body with no potential (U = 0).
struct FreeBodyModel {
  InertiaPair inertia = InertiaPair(Mat3::Identity());

  double potential(const Mat3 &) const { return 0.0; }
  Vec3 moment(const Mat3 &) const { return Vec3::Zero(); }
  Mat3 moment_jacobian(const Mat3 &) const { return Mat3::Zero(); }
  Mat3 moment_adjoint_derivative(const Mat3 &, const Vec3 &) const {
    return Mat3::Zero();
  }
  Mat3 potential_gradient(const Mat3 &) const { return Mat3::Zero(); }

  friend bool operator==(const FreeBodyModel &a, const FreeBodyModel &b) {
    return a.inertia == b.inertia;
  }
};

/// Closed set of physical models behind one interface.
class PotentialModel {
public:
  using Variant = std::variant<PendulumModel, SpacecraftModel, FreeBodyModel>;

  PotentialModel(PendulumModel m) : model_(std::move(m)) {}
  PotentialModel(SpacecraftModel m) : model_(std::move(m)) {}
  PotentialModel(FreeBodyModel m) : model_(std::move(m)) {}

  double potential(const Mat3 &r) const {
    return std::visit([&](const auto &m) { return m.potential(r); }, model_);
  }
  Vec3 moment(const Mat3 &r) const {
    return std::visit([&](const auto &m) { return m.moment(r); }, model_);
  }
  Mat3 moment_jacobian(const Mat3 &r) const {
    return std::visit([&](const auto &m) { return m.moment_jacobian(r); },
                      model_);
  }
  /// Nt(R, x): d(Mj(R)^T x) = Nt(R, x) zeta along dR = R S(zeta).
  Mat3 moment_adjoint_derivative(const Mat3 &r, const Vec3 &x) const {
    return std::visit(
        [&](const auto &m) { return m.moment_adjoint_derivative(r, x); },
        model_);
  }
  Mat3 potential_gradient(const Mat3 &r) const {
    return std::visit([&](const auto &m) { return m.potential_gradient(r); },
                      model_);
  }
  const InertiaPair &inertia() const {
    return std::visit(
        [](const auto &m) -> const InertiaPair & { return m.inertia; }, model_);
  }

  const Variant &variant() const { return model_; }
  std::string name() const {
    return std::visit(
        [](const auto &m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, PendulumModel>) return "pendulum";
          else if constexpr (std::is_same_v<T, SpacecraftModel>) return "spacecraft";
          else return "free_body";
        },
        model_);
  }

  friend bool operator==(const PotentialModel &a, const PotentialModel &b) {
    return a.model_ == b.model_;
  }

private:
  Variant model_;
};

/// Moment from an arbitrary potential gradient: M = sum_i r_i x v_i with r_i,
/// v_i the rows of R and dU/dR.
inline Vec3 moment_from_gradient(const Mat3 &r, const Mat3 &du_dr) {
  Vec3 m = Vec3::Zero();
  for (int i = 0; i < 3; ++i)
    m += Vec3(r.row(i).transpose()).cross(Vec3(du_dr.row(i).transpose()));
  return m;
}

inline double potential_energy(const PotentialModel &m, const Mat3 &r) {
  return m.potential(r);
}
inline Vec3 potential_moment(const PotentialModel &m, const Mat3 &r) {
  return m.moment(r);
}
inline Mat3 moment_jacobian(const PotentialModel &m, const Mat3 &r) {
  return m.moment_jacobian(r);
}
inline Mat3 moment_adjoint_derivative(const PotentialModel &m, const Mat3 &r,
                                      const Vec3 &x) {
  return m.moment_adjoint_derivative(r, x);
}

} // namespace so3ocp
