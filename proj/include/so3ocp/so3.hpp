#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

// Rotation group kernel: hat/vee maps, Rodrigues exponential, logarithm and
// orthogonality diagnostics. Rotations are plain Mat3 values that satisfy
// R^T R = I and det R = 1; skew matrices are Mat3 values with A = -A^T.

#include "so3ocp/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace so3ocp {

inline constexpr double kSmallAngle = 1e-8;
inline constexpr double kNearPi = 1e-3;
/// Below this the skew part of a half turn carries no usable sign.
inline constexpr double kHalfTurnSkew = 1e-12;
inline constexpr double kSkewTolerance = 1e-9;

/// S(v): the skew matrix with S(v) w = v x w.
inline Mat3 hat(const Vec3 &v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

/// Inverse of hat. Off-diagonal pairs are averaged, so the result is exact
/// for exact skew input and first-order insensitive to symmetric noise.
inline Vec3 vee(const Mat3 &a, double tol = kSkewTolerance) {
  const double asym = (a + a.transpose()).norm();
  if (!(asym <= tol)) throw SkewnessViolation(asym);
  return {0.5 * (a(2, 1) - a(1, 2)), 0.5 * (a(0, 2) - a(2, 0)),
          0.5 * (a(1, 0) - a(0, 1))};
}

/// Closed-form exponential exp(S(v)).
inline Mat3 exp_so3(const Vec3 &v) {
  const double theta = v.norm();
  double a; // sin(t)/t
  double b; // (1 - cos(t))/t^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    const double s = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * s * s / (theta * theta);
  }
  const Mat3 k = hat(v);
  return Mat3::Identity() + a * k + b * (k * k);
}

/// Principal logarithm, returned as an axial vector with norm in [0, pi].
/// At (or within 1e-6 of) a half turn the axis sign is fixed so that its
/// largest-magnitude component is nonnegative.
inline Vec3 log_so3(const Mat3 &r) {
  const Vec3 w{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  const double theta = std::atan2(0.5 * w.norm(), 0.5 * (r.trace() - 1.0));

  if (theta < kSmallAngle) {
    // w = 2 sin(t) axis; t / (2 sin t) = 1/2 (1 + t^2/6 + ...)
    return 0.5 * (1.0 + theta * theta / 6.0) * w;
  }
  if (std::numbers::pi - theta < kNearPi) {
    // (sym(R) + I)/2 = cos^2(t/2) I + sin^2(t/2) axis axis^T
    const double ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
    const Mat3 b = (0.25 * (r + r.transpose()) + (0.5 - ch * ch) * Mat3::Identity()) /
                   (sh * sh);
    Eigen::Index i = 0;
    b.diagonal().maxCoeff(&i);
    Vec3 axis = b.col(i) / std::sqrt(std::max(b(i, i), 0.0));
    axis.normalize();
    if (w.norm() > kHalfTurnSkew) {
      if (axis.dot(w) < 0.0) axis = -axis;
    } else {
      Eigen::Index j = 0;
      axis.cwiseAbs().maxCoeff(&j);
      if (axis(j) < 0.0) axis = -axis;
    }
    return theta * axis;
  }
  return theta / (2.0 * std::sin(theta)) * w;
}

/// ||R^T R - I||_F
inline double orthonormality_defect(const Mat3 &r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

/// |det R - 1|
inline double determinant_defect(const Mat3 &r) {
  return std::abs(r.determinant() - 1.0);
}

inline bool is_rotation(const Mat3 &r, double tol = 1e-12) {
  return orthonormality_defect(r) <= tol && determinant_defect(r) <= tol;
}

/// tr(A) I - A. Satisfies S(x) A + A^T S(x) = S((tr(A) I - A) x).
inline Mat3 trace_complement(const Mat3 &a) {
  return a.trace() * Mat3::Identity() - a;
}

/// Nearest rotation in the Frobenius norm (polar factor via SVD).
inline Mat3 project_to_rotation(const Mat3 &m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

} // namespace so3ocp
