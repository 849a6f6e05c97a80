#include "svylasso/marginal_effects.hpp"

#include "svylasso/parallel.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace svylasso {

namespace {

void check_dummy_column(const Dataset& data, int j) {
  if (j < 1 || j > data.p()) {
    throw std::invalid_argument("regressor index out of range: " + std::to_string(j));
  }
  const auto col = data.X.col(j);
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (col[i] != 0.0 && col[i] != 1.0) {
      const std::string name = data.column_names.empty()
                                   ? "column " + std::to_string(j)
                                   : data.column_names[static_cast<std::size_t>(j - 1)];
      throw std::invalid_argument("marginal effects need a binary regressor; " + name +
                                  " has value " + std::to_string(col[i]) + " at row " +
                                  std::to_string(i));
    }
  }
}

// Row with column j forced to `value`; product columns recomputed from their
// (possibly toggled) parents.
void toggled_row(const Dataset& data, Eigen::Index i, int j, double value, Eigen::VectorXd& x) {
  x = data.X.row(i).transpose();
  x[j] = value;
  if (data.expansion) {
    const ExpansionMap& em = *data.expansion;
    const Eigen::Index q0 = 1 + em.base_regressors;
    for (std::size_t t = 0; t < em.parentage.size(); ++t) {
      const auto [u, v] = em.parentage[t];
      x[q0 + static_cast<Eigen::Index>(t)] = x[u] * x[v];
    }
  }
}

double logistic_deriv(double t) {
  const double m = logistic(t);
  return m * (1.0 - m);
}

}  // namespace

double marginal_effect(const Dataset& data, const Theta& theta, int j, Eigen::Index i) {
  check_dummy_column(data, j);
  if (theta.coef.size() != data.X.cols()) throw std::invalid_argument("theta dimension mismatch");
  if (i < 0 || i >= data.n()) throw std::invalid_argument("observation index out of range");
  Eigen::VectorXd x1, x0;
  toggled_row(data, i, j, 1.0, x1);
  toggled_row(data, i, j, 0.0, x0);
  return logistic(x1.dot(theta.coef)) - logistic(x0.dot(theta.coef));
}

AmeResult ame(const Dataset& data, const Theta& theta, int j) {
  check_dummy_column(data, j);
  if (theta.coef.size() != data.X.cols()) throw std::invalid_argument("theta dimension mismatch");

  const Eigen::Index n = data.n();
  const Eigen::Index q = data.X.cols();
  const std::ptrdiff_t m = num_chunks(n);

  std::vector<double> me_partial(static_cast<std::size_t>(m), 0.0);
  Eigen::MatrixXd jac_partial = Eigen::MatrixXd::Zero(q, m);

  for_each_chunk(n, [&](std::ptrdiff_t c, std::ptrdiff_t b, std::ptrdiff_t e) {
    double acc = 0.0;
    Eigen::VectorXd jac = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd x1(q), x0(q);
    for (std::ptrdiff_t i = b; i < e; ++i) {
      toggled_row(data, i, j, 1.0, x1);
      toggled_row(data, i, j, 0.0, x0);
      const double t1 = x1.dot(theta.coef);
      const double t0 = x0.dot(theta.coef);
      acc += data.w[i] * (logistic(t1) - logistic(t0));
      jac += data.w[i] * (logistic_deriv(t1) * x1 - logistic_deriv(t0) * x0);
    }
    me_partial[static_cast<std::size_t>(c)] = acc;
    jac_partial.col(c) = jac;
  });

  double me_sum = 0.0;
  Eigen::VectorXd jac_sum = Eigen::VectorXd::Zero(q);
  for (std::ptrdiff_t c = 0; c < m; ++c) {
    me_sum += me_partial[static_cast<std::size_t>(c)];
    jac_sum += jac_partial.col(c);
  }

  const double wsum = data.w.sum();
  AmeResult res;
  res.ame_hat = me_sum / wsum;
  res.jacobian_column = jac_sum / wsum;
  res.regressor_index = j;
  return res;
}

SmoothFunctional ame_functional(const Dataset& data, int j) {
  check_dummy_column(data, j);
  auto shared = std::make_shared<const Dataset>(data);
  SmoothFunctional f;
  f.r = 1;
  f.evaluate = [shared, j](const Theta& theta) {
    Eigen::VectorXd v(1);
    v[0] = ame(*shared, theta, j).ame_hat;
    return v;
  };
  f.jacobian = [shared, j](const Theta& theta) {
    const AmeResult r = ame(*shared, theta, j);
    Eigen::MatrixXd jac(shared->X.cols(), 1);
    jac.col(0) = r.jacobian_column;
    return jac;
  };
  return f;
}

}  // namespace svylasso
