#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace so3ocp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Control input vector; its length is the number of columns of the input
/// matrix (2 for the underactuated pendulum, 3 for a fully actuated body).
using ControlVec = Eigen::VectorXd;
/// 3 x m input matrix mapping controls to body-frame torques.
using InputMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SkewnessViolation : public Error {
public:
  explicit SkewnessViolation(double asymmetry)
      : Error("matrix is not skew-symmetric: |A + A^T|_F = " +
              std::to_string(asymmetry)),
        asymmetry(asymmetry) {}
  double asymmetry;
};

class NotSymmetric : public Error {
public:
  NotSymmetric() : Error("inertia matrix is not symmetric") {}
};

class NotPositiveDefinite : public Error {
public:
  NotPositiveDefinite() : Error("inertia matrix is not positive definite") {}
};

/// The implicit relative-attitude solve did not reach its tolerance.
class NoConvergence : public Error {
public:
  NoConvergence(int iterations, double residual, std::ptrdiff_t step_index = -1)
      : Error(message(iterations, residual, step_index)), iterations(iterations),
        residual(residual), step_index(step_index) {}

  NoConvergence with_step(std::ptrdiff_t k) const {
    return NoConvergence(iterations, residual, k);
  }

  int iterations;
  double residual;
  std::ptrdiff_t step_index;

private:
  static std::string message(int it, double res, std::ptrdiff_t k) {
    std::string s = "relative attitude solve failed after " +
                    std::to_string(it) + " iterations (residual " +
                    std::to_string(res) + ")";
    if (k >= 0) s += " at step " + std::to_string(k);
    return s;
  }
};

/// tr(F Jd) I - F Jd is (numerically) singular.
class SingularInnerMatrix : public Error {
public:
  explicit SingularInnerMatrix(double condition)
      : Error("inner matrix tr(F Jd) I - F Jd is singular (cond " +
              std::to_string(condition) + ")"),
        condition(condition) {}
  double condition;
};

/// A 6x6 multiplier/variation transition is singular.
class SingularTransition : public Error {
public:
  SingularTransition(double condition, std::ptrdiff_t step_index = -1)
      : Error("singular 6x6 transition (cond " + std::to_string(condition) +
              ")" +
              (step_index >= 0 ? " at step " + std::to_string(step_index)
                               : std::string())),
        condition(condition), step_index(step_index) {}
  double condition;
  std::ptrdiff_t step_index;
};

} // namespace so3ocp
