#pragma once

#include <stdexcept>
#include <string>

namespace svylasso {

// Curvature matrix not invertible at the requested point.
struct singular_hessian_error : std::runtime_error {
  double min_eigenvalue;
  explicit singular_hessian_error(double eig)
      : std::runtime_error("negative Hessian is numerically singular (min eigenvalue " +
                           std::to_string(eig) + " <= 1e-10)"),
        min_eigenvalue(eig) {}
};

// Unpenalized MLE diverged; the classes are (quasi-)separated.
struct separation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cross-validation could not be set up or scored.
struct cv_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Jacobian of the functional fails the minimum-eigenvalue rank condition.
struct rank_deficient_jacobian_error : std::runtime_error {
  double min_eigenvalue;
  explicit rank_deficient_jacobian_error(double eig)
      : std::runtime_error(
            "functional jacobian is rank deficient: min eigenvalue of J'J = " +
            std::to_string(eig) + " <= 1e-10"),
        min_eigenvalue(eig) {}
};

}  // namespace svylasso
