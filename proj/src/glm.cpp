#include "svylasso/glm.hpp"

#include "svylasso/parallel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace svylasso {

void Dataset::validate() const {
  const Eigen::Index nn = y.size();
  if (nn < 1) throw std::invalid_argument("dataset must contain at least one observation");
  if (X.rows() != nn) throw std::invalid_argument("design matrix row count does not match outcome length");
  if (X.cols() < 1) throw std::invalid_argument("design matrix must include an intercept column");
  if (w.size() != nn) throw std::invalid_argument("weight vector length does not match outcome length");
  for (Eigen::Index i = 0; i < nn; ++i) {
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
      throw std::invalid_argument("survey weights must be strictly positive and finite (row " +
                                  std::to_string(i) + ")");
    }
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw std::invalid_argument("outcome must be binary 0/1 (row " + std::to_string(i) + ")");
    }
  }
  if (!X.allFinite()) throw std::invalid_argument("design matrix contains non-finite entries");
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const bool all_ones = (X.col(j).array() == 1.0).all();
    if (j == 0 && !all_ones) {
      throw std::invalid_argument("design column 0 must be the all-ones intercept");
    }
    if (j > 0 && all_ones) {
      throw std::invalid_argument("design has a second all-ones column at index " + std::to_string(j));
    }
  }
  if (!column_names.empty() &&
      static_cast<Eigen::Index>(column_names.size()) != X.cols() - 1) {
    throw std::invalid_argument("column_names must have one entry per non-intercept column");
  }
}

Dataset Dataset::make(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::VectorXd w,
                      std::vector<std::string> column_names) {
  Dataset d;
  d.y = std::move(y);
  d.X = std::move(X);
  d.w = std::move(w);
  if (column_names.empty()) {
    for (Eigen::Index j = 1; j < d.X.cols(); ++j) {
      column_names.push_back("x" + std::to_string(j));
    }
  }
  d.column_names = std::move(column_names);
  d.validate();
  return d;
}

namespace {

void check_dims(const Dataset& data, const Theta& theta) {
  if (theta.coef.size() != data.X.cols()) {
    throw std::invalid_argument("theta length " + std::to_string(theta.coef.size()) +
                                " does not match design width " + std::to_string(data.X.cols()));
  }
  if (!theta.is_finite()) throw std::invalid_argument("theta contains non-finite entries");
}

}  // namespace

double weighted_loglik(const Dataset& data, const Theta& theta, Family family) {
  check_dims(data, theta);
  const FamilyOps& ops = family_ops(family);
  const Eigen::Index n = data.n();
  const Eigen::VectorXd t = data.X * theta.coef;

  std::vector<double> partial(static_cast<std::size_t>(num_chunks(n)), 0.0);
  for_each_chunk(n, [&](std::ptrdiff_t c, std::ptrdiff_t b, std::ptrdiff_t e) {
    double acc = 0.0;
    for (std::ptrdiff_t i = b; i < e; ++i) {
      acc += data.w[i] * ops.g(data.y[i], t[i]);
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });

  double total = 0.0;
  for (double v : partial) total += v;
  return -total / static_cast<double>(n);
}

Eigen::VectorXd score(const Dataset& data, const Theta& theta, Family family) {
  check_dims(data, theta);
  const FamilyOps& ops = family_ops(family);
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.X.cols();
  const Eigen::VectorXd t = data.X * theta.coef;

  const std::ptrdiff_t m = num_chunks(n);
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(q, m);
  for_each_chunk(n, [&](std::ptrdiff_t c, std::ptrdiff_t b, std::ptrdiff_t e) {
    Eigen::VectorXd u(e - b);
    for (std::ptrdiff_t i = b; i < e; ++i) {
      u[i - b] = -data.w[i] * ops.dg(data.y[i], t[i]);
    }
    partial.col(c).noalias() = data.X.middleRows(b, e - b).transpose() * u;
  });

  Eigen::VectorXd s = Eigen::VectorXd::Zero(q);
  for (std::ptrdiff_t c = 0; c < m; ++c) s += partial.col(c);
  return s / static_cast<double>(n);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hessian_and_info(const Dataset& data,
                                                             const Theta& theta,
                                                             Family family) {
  check_dims(data, theta);
  const FamilyOps& ops = family_ops(family);
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.X.cols();
  const Eigen::VectorXd t = data.X * theta.coef;

  const std::ptrdiff_t m = num_chunks(n);
  std::vector<Eigen::MatrixXd> hp(static_cast<std::size_t>(m));
  std::vector<Eigen::MatrixXd> ip(static_cast<std::size_t>(m));
  for_each_chunk(n, [&](std::ptrdiff_t c, std::ptrdiff_t b, std::ptrdiff_t e) {
    const auto Xc = data.X.middleRows(b, e - b);
    Eigen::VectorXd dh(e - b), di(e - b);
    for (std::ptrdiff_t i = b; i < e; ++i) {
      const double dg = ops.dg(data.y[i], t[i]);
      dh[i - b] = data.w[i] * ops.ddg(data.y[i], t[i]);
      di[i - b] = data.w[i] * data.w[i] * dg * dg;
    }
    hp[static_cast<std::size_t>(c)].noalias() = Xc.transpose() * dh.asDiagonal() * Xc;
    ip[static_cast<std::size_t>(c)].noalias() = Xc.transpose() * di.asDiagonal() * Xc;
  });

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q, q);
  Eigen::MatrixXd I = Eigen::MatrixXd::Zero(q, q);
  for (std::ptrdiff_t c = 0; c < m; ++c) {
    H += hp[static_cast<std::size_t>(c)];
    I += ip[static_cast<std::size_t>(c)];
  }
  H /= static_cast<double>(n);
  I /= static_cast<double>(n);
  // symmetrize away rounding asymmetry from the block products
  H = ((H + H.transpose()) * 0.5).eval();
  I = ((I + I.transpose()) * 0.5).eval();
  return {std::move(H), std::move(I)};
}

LikelihoodParts likelihood_parts(const Dataset& data, const Theta& theta, Family family) {
  LikelihoodParts parts;
  parts.loglik = weighted_loglik(data, theta, family);
  parts.score = score(data, theta, family);
  auto hi = hessian_and_info(data, theta, family);
  parts.hessian = std::move(hi.first);
  parts.info = std::move(hi.second);
  return parts;
}

namespace reference {

double weighted_loglik(const Dataset& data, const Theta& theta, Family family) {
  check_dims(data, theta);
  const FamilyOps& ops = family_ops(family);
  const Eigen::Index n = data.n();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += data.w[i] * ops.g(data.y[i], data.X.row(i).dot(theta.coef));
  }
  return -acc / static_cast<double>(n);
}

Eigen::VectorXd score(const Dataset& data, const Theta& theta, Family family) {
  check_dims(data, theta);
  const FamilyOps& ops = family_ops(family);
  const Eigen::Index n = data.n();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(data.X.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dg = ops.dg(data.y[i], data.X.row(i).dot(theta.coef));
    s -= data.w[i] * dg * data.X.row(i).transpose();
  }
  return s / static_cast<double>(n);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hessian_and_info(const Dataset& data,
                                                             const Theta& theta,
                                                             Family family) {
  check_dims(data, theta);
  const FamilyOps& ops = family_ops(family);
  const Eigen::Index n = data.n();
  const Eigen::Index q = data.X.cols();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q, q);
  Eigen::MatrixXd I = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = data.X.row(i).dot(theta.coef);
    const double dg = ops.dg(data.y[i], t);
    const Eigen::VectorXd x = data.X.row(i).transpose();
    H += data.w[i] * ops.ddg(data.y[i], t) * x * x.transpose();
    I += data.w[i] * data.w[i] * dg * dg * x * x.transpose();
  }
  return {H / static_cast<double>(n), I / static_cast<double>(n)};
}

}  // namespace reference

}  // namespace svylasso
