#include "svylasso/debias.hpp"

#include "svylasso/errors.hpp"
#include "svylasso/marginal_effects.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace svylasso {

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double chi_square_upper_p(double x, int df) {
  if (df < 1) throw std::invalid_argument("degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

namespace {

struct HessianInverse {
  Eigen::MatrixXd inv;
  double min_eigenvalue = 0.0;
  bool ridge_applied = false;
  double ridge_value = 0.0;
};

HessianInverse invert_hessian(Eigen::MatrixXd H, const DebiasOptions& opts) {
  H = ((H + H.transpose()) * 0.5).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  HessianInverse out;
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  if (out.min_eigenvalue <= opts.min_eigenvalue) {
    if (!opts.ridge_on_singular) throw singular_hessian_error(out.min_eigenvalue);
    out.ridge_value = 1e-8 * H.trace() / static_cast<double>(H.rows());
    out.ridge_applied = true;
    H.diagonal().array() += out.ridge_value;
    eig.compute(H);
    const double jittered = eig.eigenvalues().minCoeff();
    if (jittered <= opts.min_eigenvalue) throw singular_hessian_error(jittered);
  }
  out.inv = eig.eigenvectors() *
            eig.eigenvalues().cwiseInverse().asDiagonal() *
            eig.eigenvectors().transpose();
  return out;
}

DebiasedEstimate debias_core(const Dataset& data, const FitResult& fit,
                             const Eigen::VectorXd& rho_hat, const Eigen::MatrixXd* jac,
                             const DebiasOptions& opts) {
  if (!fit.converged) throw std::invalid_argument("debiasing requires a converged fit");

  const LikelihoodParts parts = likelihood_parts(data, fit.theta_hat);
  const HessianInverse hi = invert_hessian(parts.hessian, opts);
  const Eigen::VectorXd correction = hi.inv * parts.score;
  const Eigen::MatrixXd mid = hi.inv * parts.info * hi.inv;

  DebiasedEstimate est;
  if (jac != nullptr) {
    est.estimate = rho_hat + jac->transpose() * correction;
    est.covariance = jac->transpose() * mid * (*jac);
  } else {
    est.estimate = rho_hat + correction;
    est.covariance = mid;
  }
  est.covariance = ((est.covariance + est.covariance.transpose()) * 0.5).eval();

  const Eigen::Index n = data.n();
  const Eigen::Index r = est.estimate.size();
  est.n = n;
  est.std_errors.resize(r);
  est.wald_stats.resize(r);
  est.p_values.resize(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double v = est.covariance(k, k);
    est.std_errors[k] = v > 0.0 ? std::sqrt(v / static_cast<double>(n)) : 0.0;
    if (est.std_errors[k] > 0.0) {
      est.wald_stats[k] = est.estimate[k] / est.std_errors[k];
      est.p_values[k] = normal_two_sided_p(est.wald_stats[k]);
    } else {
      est.wald_stats[k] = std::numeric_limits<double>::quiet_NaN();
      est.p_values[k] = std::numeric_limits<double>::quiet_NaN();
    }
  }

  est.hessian_min_eigenvalue = hi.min_eigenvalue;
  est.ridge_applied = hi.ridge_applied;
  est.ridge_value = hi.ridge_value;
  const double p = static_cast<double>(data.p());
  est.sparsity_diagnostic =
      p >= 2.0 ? fit.m0_hat * std::log(p) * std::sqrt(p / static_cast<double>(n)) : 0.0;
  return est;
}

}  // namespace

DebiasedEstimate debias_theta(const Dataset& data, const FitResult& fit,
                              const DebiasOptions& options) {
  return debias_core(data, fit, fit.theta_hat.coef, nullptr, options);
}

DebiasedEstimate debias_functional(const Dataset& data, const FitResult& fit,
                                   const SmoothFunctional& rho, const DebiasOptions& options) {
  if (!rho.evaluate || !rho.jacobian) throw std::invalid_argument("functional is not populated");
  const Eigen::VectorXd value = rho.evaluate(fit.theta_hat);
  const Eigen::MatrixXd jac = rho.jacobian(fit.theta_hat);
  if (jac.rows() != data.X.cols() || jac.cols() != value.size()) {
    throw std::invalid_argument("functional jacobian has the wrong shape");
  }
  const Eigen::MatrixXd gram = jac.transpose() * jac;
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().minCoeff();
  if (min_eig <= 1e-10) throw rank_deficient_jacobian_error(min_eig);
  return debias_core(data, fit, value, &jac, options);
}

std::pair<double, double> wald_test(const DebiasedEstimate& est, const Eigen::VectorXd& null_value) {
  const Eigen::Index r = est.estimate.size();
  if (null_value.size() != r) throw std::invalid_argument("null value dimension mismatch");
  if (r == 1) {
    return wald_test_component(est, 0, null_value[0]);
  }
  const Eigen::VectorXd diff = est.estimate - null_value;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(est.covariance);
  const double q = static_cast<double>(est.n) * diff.dot(ldlt.solve(diff));
  return {q, chi_square_upper_p(q, static_cast<int>(r))};
}

std::pair<double, double> wald_test_component(const DebiasedEstimate& est, Eigen::Index k,
                                              double null_value) {
  if (k < 0 || k >= est.estimate.size()) throw std::invalid_argument("component index out of range");
  const double se = est.std_errors[k];
  if (!(se > 0.0)) throw std::invalid_argument("component has a zero standard error");
  const double z = (est.estimate[k] - null_value) / se;
  return {z, normal_two_sided_p(z)};
}

std::pair<double, double> svy_mle_ttest(const Dataset& data, double null_value, int index,
                                        TestTarget target) {
  MleFit mle = fit_mle(data);
  if (!mle.converged) {
    throw separation_error("unpenalized MLE did not converge");
  }
  return svy_mle_ttest(data, mle, null_value, index, target);
}

std::pair<double, double> svy_mle_ttest(const Dataset& data, const MleFit& mle, double null_value,
                                        int index, TestTarget target) {
  if (!mle.converged) throw separation_error("unpenalized MLE did not converge");
  const auto [H, I] = hessian_and_info(data, mle.theta);
  DebiasOptions opts;  // no ridge for the baseline test
  const HessianInverse hi = [&] {
    Eigen::MatrixXd Hs = H;
    return invert_hessian(std::move(Hs), opts);
  }();
  const Eigen::MatrixXd cov = hi.inv * I * hi.inv;

  double estimate = 0.0, variance = 0.0;
  if (target == TestTarget::coefficient) {
    if (index < 0 || index >= mle.theta.coef.size()) {
      throw std::invalid_argument("coefficient index out of range");
    }
    estimate = mle.theta.coef[index];
    variance = cov(index, index);
  } else {
    const AmeResult am = ame(data, mle.theta, index);
    estimate = am.ame_hat;
    variance = am.jacobian_column.dot(cov * am.jacobian_column);
  }
  if (!(variance > 0.0)) throw std::runtime_error("nonpositive variance in survey t-test");
  const double z = (estimate - null_value) / std::sqrt(variance / static_cast<double>(data.n()));
  return {z, normal_two_sided_p(z)};
}

}  // namespace svylasso
