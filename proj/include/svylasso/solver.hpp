#pragma once

#include "svylasso/glm.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace svylasso {

// L1 penalty lambda * sum_j weights_j |beta_j|. The intercept is never
// penalized. Empty weights mean the plain Lasso (all ones).
struct PenaltySpec {
  double lambda = 0.0;
  Eigen::VectorXd per_coefficient_weights;

  Eigen::VectorXd effective_weights(Eigen::Index p) const;
};

// Max stationarity violations of the subgradient conditions at a point.
struct KktResiduals {
  double active = 0.0;     // max_j |S_j - lambda w_j sign(beta_j)| over active j
  double inactive = 0.0;   // max_j (|S_j| - lambda w_j) over inactive j
  double intercept = 0.0;  // |S_0|

  bool ok(double stationarity_tol, double intercept_tol, double lambda) const {
    const double scale = std::max(1.0, lambda);
    return active <= stationarity_tol * scale && inactive <= stationarity_tol &&
           intercept <= intercept_tol;
  }
};

struct FitResult {
  Theta theta_hat;
  double lambda = 0.0;
  std::vector<int> active_set;       // design-column indices (>= 1) with beta_j != 0
  int m0_hat = 0;                    // estimated sparsity, |active_set|
  long iterations = 0;               // coordinate sweeps
  double objective = 0.0;            // -L_n(theta_hat) + lambda sum w_j |beta_j|
  bool converged = false;
  bool separation_warning = false;   // coefficient norm grew past 1e3
  std::vector<int> dropped_columns;  // zero weighted variance, coefficient pinned at 0
  KktResiduals kkt;
};

struct FitOptions {
  double tol = 1e-8;                // relative objective-change tolerance
  long max_iter = 100000;           // coordinate sweep budget
  double kkt_tol = 1e-7;            // stationarity target, scaled by max(1, lambda)
  double kkt_intercept_tol = 1e-9;
  double inner_tol = 1e-15;         // coordinate-descent change threshold per sweep
};

// Loose targets for path fits whose only job is out-of-fold scoring.
inline FitOptions path_fit_options() {
  FitOptions o;
  o.tol = 1e-7;
  o.kkt_tol = 1e-4;
  o.kkt_intercept_tol = 1e-6;
  o.inner_tol = 1e-11;
  return o;
}

// IRLS with cyclic coordinate descent and soft-thresholding; proximal-gradient
// fallback when a quadratic step fails to descend. Deterministic given inputs.
FitResult fit_penalized(const Dataset& data, const PenaltySpec& penalty,
                        std::optional<Theta> init = std::nullopt,
                        const FitOptions& options = {});

inline FitResult fit_penalized(const Dataset& data, const PenaltySpec& penalty,
                               std::optional<Theta> init, double tol, long max_iter) {
  FitOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return fit_penalized(data, penalty, std::move(init), o);
}

// Warm-started fits along a descending grid; one standardization pass.
std::vector<FitResult> fit_path(const Dataset& data, const Eigen::VectorXd& grid_descending,
                                const Eigen::VectorXd& penalty_weights,
                                const FitOptions& options = path_fit_options());

// Smallest lambda at which every penalized coefficient is zero:
// max_j |S_j(theta_null)| / w_j with theta_null the intercept-only fit.
double lambda_max(const Dataset& data, const Eigen::VectorXd& penalty_weights);

// w_j = 1 / (|beta_j_init|^gamma + floor)
Eigen::VectorXd adaptive_weights(const FitResult& initial_fit, double gamma = 1.0,
                                 double floor = 1e-3);

double penalized_objective(const Dataset& data, const Theta& theta, const PenaltySpec& penalty);

KktResiduals kkt_residuals(const Dataset& data, const Theta& theta, const PenaltySpec& penalty);

// Unpenalized weighted MLE by damped Newton. Used by the survey t-test.
// Throws separation_error when the iterates diverge.
struct MleFit {
  Theta theta;
  bool converged = false;
  int iterations = 0;
  double score_inf_norm = 0.0;
};

MleFit fit_mle(const Dataset& data, double tol = 1e-12, int max_iter = 100);

}  // namespace svylasso
