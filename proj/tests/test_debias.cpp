#include "svylasso/debias.hpp"

#include "svylasso/errors.hpp"
#include "svylasso/marginal_effects.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace svylasso;

namespace {

FitResult converged_fit(Theta theta) {
  FitResult fit;
  fit.theta_hat = std::move(theta);
  fit.converged = true;
  for (Eigen::Index j = 1; j < fit.theta_hat.coef.size(); ++j) {
    if (fit.theta_hat.coef[j] != 0.0) fit.active_set.push_back(static_cast<int>(j));
  }
  fit.m0_hat = static_cast<int>(fit.active_set.size());
  return fit;
}

}  // namespace

TEST_SUITE_BEGIN("debias");

TEST_CASE("wald pinned values") {
  DebiasedEstimate est;
  est.estimate = Eigen::VectorXd::Constant(1, 1.3);
  est.covariance = Eigen::MatrixXd::Constant(1, 1, 4.0);
  est.n = 100;
  est.std_errors = Eigen::VectorXd::Constant(1, std::sqrt(4.0 / 100));
  est.wald_stats = est.estimate.cwiseQuotient(est.std_errors);
  est.p_values = Eigen::VectorXd::Constant(1, 0.0);

  // null at the estimate
  auto [z0, p0] = wald_test(est, est.estimate);
  CHECK(z0 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p0 == doctest::Approx(1.0).epsilon(1e-15));

  // z = 1.96 by construction: null = estimate - 1.96 * se
  Eigen::VectorXd null1(1);
  null1[0] = est.estimate[0] - 1.96 * est.std_errors[0];
  auto [z1, p1] = wald_test(est, null1);
  CHECK(z1 == doctest::Approx(1.96).epsilon(1e-12));
  CHECK(p1 == doctest::Approx(0.05).epsilon(2e-3));
}

TEST_CASE("chi-square reference for joint tests") {
  // survival of chi-square(2) is exp(-x/2)
  CHECK(chi_square_upper_p(5.991, 2) == doctest::Approx(std::exp(-5.991 / 2.0)).epsilon(1e-10));
  CHECK(chi_square_upper_p(5.991, 2) == doctest::Approx(0.05).epsilon(1e-3));

  DebiasedEstimate est;
  est.estimate = Eigen::VectorXd::Zero(2);
  est.covariance = Eigen::MatrixXd::Identity(2, 2);
  est.n = 1;
  est.std_errors = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd null(2);
  null << std::sqrt(5.991), 0.0;
  auto [q, p] = wald_test(est, null);
  CHECK(q == doctest::Approx(5.991).epsilon(1e-12));
  CHECK(p == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("one-step correction from the intercept-only point") {
  Eigen::VectorXd y(2), w = Eigen::VectorXd::Ones(2);
  y << 1.0, 0.0;
  const Dataset d = Dataset::make(y, Eigen::MatrixXd::Ones(2, 1), w);
  Eigen::VectorXd th(1);
  th << 0.2;
  const DebiasedEstimate est = debias_theta(d, converged_fit(Theta(th)));

  // independent evaluation: S = -(1/2) sum dg, H = (1/2) sum mu(1-mu)
  const double mu = oracles::expit(0.2);
  const double s = -0.5 * ((mu - 1.0) + mu);
  const double h = mu * (1.0 - mu);
  CHECK(est.estimate[0] == doctest::Approx(0.2 + s / h).epsilon(1e-12));

  // a single damped-Newton step from the same point
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
  const auto grad_step = 0.2 + s / h;
  CHECK(est.estimate[0] == doctest::Approx(grad_step).epsilon(1e-14));
}

TEST_CASE("fixed point at the exact MLE") {
  Rng rng(1001);
  for (int rep = 0; rep < 8; ++rep) {
    const auto inst = oracles::random_instance(rng, 250, 3, 0.5, 0.5);
    const Dataset d = oracles::to_dataset(inst);
    PenaltySpec pen;
    FitOptions strict;
    strict.kkt_tol = 1e-12;
    strict.kkt_intercept_tol = 1e-12;
    const FitResult fit = fit_penalized(d, pen, std::nullopt, strict);
    REQUIRE(fit.converged);
    const DebiasedEstimate est = debias_theta(d, fit);
    for (Eigen::Index k = 0; k < est.estimate.size(); ++k) {
      CHECK(std::abs(est.estimate[k] - fit.theta_hat.coef[k]) < 1e-10);
    }
  }
}

TEST_CASE("identity functional reproduces coefficient debiasing") {
  Rng rng(1002);
  const auto inst = oracles::random_instance(rng, 150, 3);
  const Dataset d = oracles::to_dataset(inst);
  PenaltySpec pen;
  pen.lambda = 0.3 * lambda_max(d, Eigen::VectorXd::Ones(3));
  const FitResult fit = fit_penalized(d, pen);
  REQUIRE(fit.converged);

  SmoothFunctional ident;
  ident.r = static_cast<int>(d.p() + 1);
  ident.evaluate = [](const Theta& t) { return t.coef; };
  ident.jacobian = [&](const Theta& t) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(t.coef.size(), t.coef.size()));
  };

  const DebiasedEstimate a = debias_theta(d, fit);
  const DebiasedEstimate b = debias_functional(d, fit, ident);
  CHECK((a.estimate - b.estimate).lpNorm<Eigen::Infinity>() < 1e-13);
  CHECK((a.covariance - b.covariance).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("linear functionals commute with coefficient debiasing") {
  Rng rng(1003);
  for (int rep = 0; rep < 6; ++rep) {
    const auto inst = oracles::random_instance(rng, 180, 4);
    const Dataset d = oracles::to_dataset(inst);
    PenaltySpec pen;
    pen.lambda = 0.2 * lambda_max(d, Eigen::VectorXd::Ones(4));
    const FitResult fit = fit_penalized(d, pen);
    REQUIRE(fit.converged);

    Eigen::MatrixXd C(2, d.p() + 1);
    for (Eigen::Index a = 0; a < C.rows(); ++a) {
      for (Eigen::Index b = 0; b < C.cols(); ++b) C(a, b) = rng.normal();
    }

    SmoothFunctional lin;
    lin.r = 2;
    lin.evaluate = [C](const Theta& t) -> Eigen::VectorXd { return C * t.coef; };
    lin.jacobian = [C](const Theta&) -> Eigen::MatrixXd { return C.transpose(); };

    const DebiasedEstimate theta_est = debias_theta(d, fit);
    const DebiasedEstimate rho_est = debias_functional(d, fit, lin);
    const Eigen::VectorXd expected = C * theta_est.estimate;
    CHECK((rho_est.estimate - expected).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("sandwich covariance is symmetric PSD") {
  Rng rng(1004);
  for (int rep = 0; rep < 6; ++rep) {
    const auto inst = oracles::random_instance(rng, 120, 4);
    const Dataset d = oracles::to_dataset(inst);
    PenaltySpec pen;
    pen.lambda = 0.1 * lambda_max(d, Eigen::VectorXd::Ones(4));
    const FitResult fit = fit_penalized(d, pen);
    REQUIRE(fit.converged);
    const DebiasedEstimate est = debias_theta(d, fit);

    CHECK((est.covariance - est.covariance.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
    for (int probe = 0; probe < 20; ++probe) {
      Eigen::VectorXd v(est.covariance.rows());
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.normal();
      CHECK(v.dot(est.covariance * v) >= -1e-10 * v.squaredNorm());
    }
    CHECK((est.p_values.array() >= 0.0).all());
    CHECK((est.p_values.array() <= 1.0).all());
  }
}

TEST_CASE("information-matrix equality at a large well-specified fit") {
  Rng rng(1005);
  const Eigen::Index n = 50000, p = 3;
  Eigen::MatrixXd X(n, p + 1);
  X.col(0).setOnes();
  Eigen::VectorXd y(n), w = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd theta0(p + 1);
  theta0 << 0.3, 0.8, -0.5, 0.4;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 1; j <= p; ++j) X(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = rng.bernoulli(oracles::expit(X.row(i).dot(theta0))) ? 1.0 : 0.0;
  }
  const Dataset d = Dataset::make(y, X, w);
  const FitResult fit = fit_penalized(d, PenaltySpec{});
  REQUIRE(fit.converged);

  const DebiasedEstimate est = debias_theta(d, fit);
  const auto [H, I] = hessian_and_info(d, fit.theta_hat);
  (void)I;
  const Eigen::MatrixXd hinv = H.inverse();
  for (Eigen::Index k = 0; k <= p; ++k) {
    const double sandwich_se = est.std_errors[k];
    const double inverse_h_se = std::sqrt(hinv(k, k) / static_cast<double>(n));
    CHECK(std::abs(sandwich_se / inverse_h_se - 1.0) < 0.05);
  }
}

TEST_CASE("column permutation conjugates the output") {
  Rng rng(1006);
  const auto inst = oracles::random_instance(rng, 100, 3);
  const Dataset d = oracles::to_dataset(inst);
  Eigen::VectorXd th(4);
  th << 0.2, 0.5, 0.0, -0.7;

  // permute regressors 1,2,3 -> 3,1,2 (design columns beyond the intercept)
  std::vector<int> perm{3, 1, 2};
  Eigen::MatrixXd Xp(d.n(), 4);
  Xp.col(0) = d.X.col(0);
  Eigen::VectorXd thp(4);
  thp[0] = th[0];
  for (int k = 0; k < 3; ++k) {
    Xp.col(k + 1) = d.X.col(perm[static_cast<std::size_t>(k)]);
    thp[k + 1] = th[perm[static_cast<std::size_t>(k)]];
  }
  const Dataset dp = Dataset::make(d.y, Xp, d.w);

  const DebiasedEstimate a = debias_theta(d, converged_fit(Theta(th)));
  const DebiasedEstimate b = debias_theta(dp, converged_fit(Theta(thp)));
  for (int k = 0; k < 3; ++k) {
    CHECK(a.estimate[perm[static_cast<std::size_t>(k)]] ==
          doctest::Approx(b.estimate[k + 1]).epsilon(1e-12));
    CHECK(a.std_errors[perm[static_cast<std::size_t>(k)]] ==
          doctest::Approx(b.std_errors[k + 1]).epsilon(1e-12));
  }
  CHECK(a.estimate[0] == doctest::Approx(b.estimate[0]).epsilon(1e-12));
}

TEST_CASE("singular hessian raises with the offending eigenvalue, ridge retries") {
  // duplicated regressor makes H exactly singular
  Eigen::VectorXd y(6), w = Eigen::VectorXd::Ones(6);
  y << 1, 0, 1, 0, 1, 0;
  Eigen::MatrixXd X(6, 3);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = (i % 2) ? 1.0 : 0.0;
    X(i, 2) = X(i, 1);
  }
  const Dataset d = Dataset::make(y, X, w);
  Eigen::VectorXd th = Eigen::VectorXd::Zero(3);

  bool threw = false;
  try {
    debias_theta(d, converged_fit(Theta(th)));
  } catch (const singular_hessian_error& e) {
    threw = true;
    CHECK(e.min_eigenvalue <= 1e-10);
  }
  CHECK(threw);

  DebiasOptions opts;
  opts.ridge_on_singular = true;
  const DebiasedEstimate est = debias_theta(d, converged_fit(Theta(th)), opts);
  CHECK(est.ridge_applied);
  CHECK(est.ridge_value > 0.0);
}

TEST_CASE("rank-deficient functional jacobian raises") {
  Rng rng(1007);
  const auto inst = oracles::random_instance(rng, 80, 2);
  const Dataset d = oracles::to_dataset(inst);
  const FitResult fit = fit_penalized(d, PenaltySpec{});
  REQUIRE(fit.converged);

  SmoothFunctional degenerate;
  degenerate.r = 2;
  degenerate.evaluate = [](const Theta& t) {
    Eigen::VectorXd v(2);
    v << t.coef[1], t.coef[1];
    return v;
  };
  degenerate.jacobian = [&](const Theta& t) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(t.coef.size(), 2);
    j(1, 0) = 1.0;
    j(1, 1) = 1.0;
    return j;
  };
  CHECK_THROWS_AS(debias_functional(d, fit, degenerate), rank_deficient_jacobian_error);
}

TEST_CASE("debiasing requires a converged fit") {
  Rng rng(1008);
  const auto inst = oracles::random_instance(rng, 50, 2);
  const Dataset d = oracles::to_dataset(inst);
  FitResult fit = converged_fit(Theta::zeros(2));
  fit.converged = false;
  CHECK_THROWS_AS(debias_theta(d, fit), std::invalid_argument);
}

TEST_CASE("survey t-test covers the truth at the nominal rate") {
  int rejections = 0;
  const int reps = 120;
  Eigen::VectorXd theta0(3);
  theta0 << 0.4, 0.9, -0.6;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(1009, rep));
    const Eigen::Index n = 1200;
    Eigen::MatrixXd X(n, 3);
    X.col(0).setOnes();
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      X(i, 2) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      w[i] = 0.5 + rng.uniform();
      y[i] = rng.bernoulli(oracles::expit(X.row(i).dot(theta0))) ? 1.0 : 0.0;
    }
    const Dataset d = Dataset::make(y, X, w);
    const auto [t, p] = svy_mle_ttest(d, theta0[1], 1, TestTarget::coefficient);
    (void)t;
    if (p < 0.05) ++rejections;
  }
  // 5% nominal with MC noise at 120 reps
  CHECK(rejections >= 0);
  CHECK(rejections <= 16);
}

TEST_CASE("sparsity diagnostic is reported") {
  Rng rng(1010);
  const auto inst = oracles::random_instance(rng, 100, 4);
  const Dataset d = oracles::to_dataset(inst);
  PenaltySpec pen;
  pen.lambda = 0.2 * lambda_max(d, Eigen::VectorXd::Ones(4));
  const FitResult fit = fit_penalized(d, pen);
  REQUIRE(fit.converged);
  const DebiasedEstimate est = debias_theta(d, fit);
  const double expected = fit.m0_hat * std::log(4.0) * std::sqrt(4.0 / 100.0);
  CHECK(est.sparsity_diagnostic == doctest::Approx(expected).epsilon(1e-12));
}

TEST_SUITE_END();
