#pragma once

#include "svylasso/debias.hpp"

namespace svylasso {

struct AmeResult {
  double ame_hat = 0.0;
  Eigen::VectorXd jacobian_column;  // d AME_j / d theta, length p+1
  int regressor_index = 0;          // design-column index
};

// Difference of response probabilities with the dummy column j toggled to 1
// and to 0 for observation i. Product columns recorded in the dataset's
// expansion metadata are recomputed from their parents under the toggle.
double marginal_effect(const Dataset& data, const Theta& theta, int j, Eigen::Index i);

// Survey-weighted average of the per-observation effects with its analytic
// jacobian.
AmeResult ame(const Dataset& data, const Theta& theta, int j);

// Packages the AME as a SmoothFunctional (r = 1) over a fixed dataset.
SmoothFunctional ame_functional(const Dataset& data, int j);

}  // namespace svylasso
