#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace svylasso {

// Bookkeeping for pairwise-product designs: which design columns are products
// of which parents. Indices are design-matrix columns (0 = intercept).
// Toggling a parent column must propagate to its products.
struct ExpansionMap {
  std::vector<std::string> output_columns;           // names of appended columns
  std::vector<std::pair<int, int>> parentage;        // (u, v) per appended column; u == v for squares
  int base_regressors = 0;                           // regressor count before expansion
};

// Immutable after construction. The first design column is the intercept.
struct Dataset {
  Eigen::VectorXd y;                     // binary outcome, length n
  Eigen::MatrixXd X;                     // n x (p+1), column 0 all ones
  Eigen::VectorXd w;                     // survey weights, strictly positive
  std::vector<std::string> column_names; // p names for the non-intercept columns
  std::string outcome_name = "y";
  std::string weight_name;               // empty when no weight column exists on disk
  std::optional<ExpansionMap> expansion;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols() - 1; }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;

  static Dataset make(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::VectorXd w,
                      std::vector<std::string> column_names = {});
};

// Coefficient vector (alpha, beta')' of length p+1.
struct Theta {
  Eigen::VectorXd coef;

  Theta() = default;
  explicit Theta(Eigen::VectorXd c) : coef(std::move(c)) {}

  static Theta zeros(Eigen::Index p) { return Theta(Eigen::VectorXd::Zero(p + 1)); }

  double alpha() const { return coef[0]; }
  Eigen::VectorBlock<const Eigen::VectorXd> beta() const {
    return coef.tail(coef.size() - 1);
  }
  Eigen::Index p() const { return coef.size() - 1; }
  bool is_finite() const { return coef.allFinite(); }
};

}  // namespace svylasso
