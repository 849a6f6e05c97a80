#pragma once

#include "svylasso/solver.hpp"

#include <functional>
#include <utility>

namespace svylasso {

// One-step-corrected estimate with its sandwich covariance. The covariance is
// on the sqrt(n) scale: std_errors[k] = sqrt(covariance(k,k) / n), so
// (estimate - null) / std_error is the studentized Wald statistic.
struct DebiasedEstimate {
  Eigen::VectorXd estimate;    // theta_tilde (p+1) or rho_tilde (r)
  Eigen::MatrixXd covariance;  // Hinv I Hinv, projected through the jacobian
  Eigen::VectorXd std_errors;
  Eigen::VectorXd wald_stats;  // against zero nulls, per component
  Eigen::VectorXd p_values;    // two-sided standard normal
  double hessian_min_eigenvalue = 0.0;
  bool ridge_applied = false;
  double ridge_value = 0.0;
  double sparsity_diagnostic = 0.0;  // m0_hat * log(p) * sqrt(p/n)
  Eigen::Index n = 0;
};

// rho: theta -> R^r with an analytic jacobian d rho' / d theta, (p+1) x r.
struct SmoothFunctional {
  std::function<Eigen::VectorXd(const Theta&)> evaluate;
  std::function<Eigen::MatrixXd(const Theta&)> jacobian;
  int r = 1;
};

struct DebiasOptions {
  bool ridge_on_singular = false;  // retry with jitter 1e-8 * trace / (p+1)
  double min_eigenvalue = 1e-10;
};

// theta_tilde = theta_hat + Hinv(theta_hat) S(theta_hat)
DebiasedEstimate debias_theta(const Dataset& data, const FitResult& fit,
                              const DebiasOptions& options = {});

// rho_tilde = rho(theta_hat) + J' Hinv S, covariance J' Hinv I Hinv J
DebiasedEstimate debias_functional(const Dataset& data, const FitResult& fit,
                                   const SmoothFunctional& rho,
                                   const DebiasOptions& options = {});

// r = 1: two-sided standard-normal test of the studentized statistic.
// r > 1: chi-square quadratic form with r degrees of freedom.
std::pair<double, double> wald_test(const DebiasedEstimate& est, const Eigen::VectorXd& null_value);

// Single-component test against a scalar null.
std::pair<double, double> wald_test_component(const DebiasedEstimate& est, Eigen::Index k,
                                              double null_value);

enum class TestTarget { coefficient, ame };

// Baseline survey t-test: unpenalized weighted MLE with its sandwich
// covariance; for the AME target the variance comes through the analytic
// AME jacobian. index is a design-column index (0 = intercept).
std::pair<double, double> svy_mle_ttest(const Dataset& data, double null_value, int index,
                                        TestTarget target = TestTarget::coefficient);
std::pair<double, double> svy_mle_ttest(const Dataset& data, const MleFit& mle, double null_value,
                                        int index, TestTarget target = TestTarget::coefficient);

double normal_two_sided_p(double z);
double chi_square_upper_p(double x, int df);

}  // namespace svylasso
