#pragma once

#include "svylasso/solver.hpp"

#include <cstdint>

namespace svylasso {

struct LambdaPath {
  Eigen::VectorXd grid;      // strictly descending
  Eigen::MatrixXd fold_auc;  // n_folds x grid size; NaN when a fold could not be scored
  Eigen::VectorXd mean_auc;
  double selected_lambda = 0.0;  // AUC-maximizing; ties resolve to the larger lambda
  double lambda_1se = 0.0;       // largest lambda within one SE of the best mean AUC
  std::uint64_t fold_assignment_seed = 0;
  int n_folds = 0;
};

// Weighted Mann-Whitney statistic:
//   sum_{i in pos, j in neg} w_i w_j [1(s_i > s_j) + 0.5 * 1(s_i = s_j)]
//   / (sum_pos w * sum_neg w)
double weighted_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels,
                    const Eigen::VectorXd& weights);

// Log-spaced descending grid from lambda_max down to min_ratio * lambda_max.
Eigen::VectorXd lambda_grid(double lambda_max_value, int grid_size, double min_ratio = 1e-4);

// 10-fold CV over a shared grid; folds come from a seeded uniform permutation
// and are re-randomized (up to 20 times) until every training fold contains
// both classes. Folds may be fitted concurrently; reduction order is fixed.
LambdaPath cv_select_lambda(const Dataset& data, int n_folds, int grid_size, std::uint64_t seed,
                            const Eigen::VectorXd& penalty_weights = Eigen::VectorXd(),
                            const FitOptions& fold_options = path_fit_options());

}  // namespace svylasso
