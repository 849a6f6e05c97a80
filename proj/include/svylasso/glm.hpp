#pragma once

#include "svylasso/dataset.hpp"
#include "svylasso/family.hpp"

#include <utility>

namespace svylasso {

struct LikelihoodParts {
  double loglik;            // L_n(theta)
  Eigen::VectorXd score;    // S(theta), gradient of L_n
  Eigen::MatrixXd hessian;  // negative Hessian of L_n, (1/n) sum w x x' ddg
  Eigen::MatrixXd info;     // (1/n) sum w^2 x x' dg^2
};

// L_n(theta) = -(1/n) sum_i w_i g(y_i, x_i' theta)
double weighted_loglik(const Dataset& data, const Theta& theta, Family family = Family::logit);

// S(theta) = -(1/n) sum_i w_i x_i dg(y_i, x_i' theta)
Eigen::VectorXd score(const Dataset& data, const Theta& theta, Family family = Family::logit);

// (negative Hessian, sample information), both symmetric PSD for logit.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hessian_and_info(const Dataset& data,
                                                             const Theta& theta,
                                                             Family family = Family::logit);

// Everything in one pass over the data.
LikelihoodParts likelihood_parts(const Dataset& data, const Theta& theta,
                                 Family family = Family::logit);

// Plain single-loop kernels. Kept as the reference implementation for the
// chunked kernels above; exercised by tests and the benchmark target.
namespace reference {
double weighted_loglik(const Dataset& data, const Theta& theta, Family family = Family::logit);
Eigen::VectorXd score(const Dataset& data, const Theta& theta, Family family = Family::logit);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hessian_and_info(const Dataset& data,
                                                             const Theta& theta,
                                                             Family family = Family::logit);
}  // namespace reference

}  // namespace svylasso
