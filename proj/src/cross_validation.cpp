#include "svylasso/cross_validation.hpp"

#include "svylasso/errors.hpp"
#include "svylasso/parallel.hpp"
#include "svylasso/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace svylasso {

double weighted_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels,
                    const Eigen::VectorXd& weights) {
  const Eigen::Index n = scores.size();
  if (labels.size() != n || weights.size() != n) {
    throw std::invalid_argument("weighted_auc inputs must have equal length");
  }
  double wpos = 0.0, wneg = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] == 1.0) {
      wpos += weights[i];
    } else if (labels[i] == 0.0) {
      wneg += weights[i];
    } else {
      throw std::invalid_argument("labels must be binary 0/1");
    }
  }
  if (wpos <= 0.0 || wneg <= 0.0) {
    throw std::invalid_argument("weighted_auc requires both classes present");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  double concordant = 0.0, tied = 0.0, neg_below = 0.0;
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t h = g;
    double pg = 0.0, ng = 0.0;
    while (h < order.size() && scores[order[h]] == scores[order[g]]) {
      if (labels[order[h]] == 1.0) {
        pg += weights[order[h]];
      } else {
        ng += weights[order[h]];
      }
      ++h;
    }
    concordant += pg * neg_below;
    tied += pg * ng;
    neg_below += ng;
    g = h;
  }
  return (concordant + 0.5 * tied) / (wpos * wneg);
}

Eigen::VectorXd lambda_grid(double lambda_max_value, int grid_size, double min_ratio) {
  if (grid_size < 1) throw std::invalid_argument("grid size must be positive");
  if (lambda_max_value <= 0.0) {
    return Eigen::VectorXd::Zero(1);
  }
  if (grid_size == 1) {
    Eigen::VectorXd g(1);
    g[0] = lambda_max_value;
    return g;
  }
  Eigen::VectorXd g(grid_size);
  const double lo = std::log(lambda_max_value * min_ratio);
  const double hi = std::log(lambda_max_value);
  for (int k = 0; k < grid_size; ++k) {
    g[k] = std::exp(hi + (lo - hi) * static_cast<double>(k) / (grid_size - 1));
  }
  return g;
}

namespace {

Dataset subset_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset d;
  d.y.resize(rows.size());
  d.w.resize(rows.size());
  d.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    d.y[static_cast<Eigen::Index>(k)] = data.y[rows[k]];
    d.w[static_cast<Eigen::Index>(k)] = data.w[rows[k]];
    d.X.row(static_cast<Eigen::Index>(k)) = data.X.row(rows[k]);
  }
  d.column_names = data.column_names;
  d.expansion = data.expansion;
  return d;
}

}  // namespace

LambdaPath cv_select_lambda(const Dataset& data, int n_folds, int grid_size, std::uint64_t seed,
                            const Eigen::VectorXd& penalty_weights,
                            const FitOptions& fold_options) {
  const Eigen::Index n = data.n();
  if (n_folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (n < n_folds) throw std::invalid_argument("fewer observations than folds");

  const Eigen::Index npos = (data.y.array() == 1.0).count();
  if (npos == 0 || npos == n) throw cv_error("outcome has a single class");

  PenaltySpec base;
  base.per_coefficient_weights = penalty_weights;
  const Eigen::VectorXd penw = base.effective_weights(data.p());

  LambdaPath path;
  path.n_folds = n_folds;
  path.fold_assignment_seed = seed;
  path.grid = lambda_grid(lambda_max(data, penw), grid_size);
  const Eigen::Index g = path.grid.size();

  // fold[i] in [0, n_folds); re-randomize until all training folds see both classes
  std::vector<int> fold(static_cast<std::size_t>(n));
  bool ok = false;
  for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, 0xF01D5ULL, static_cast<std::uint64_t>(attempt)));
    rng.shuffle(perm);
    for (std::size_t k = 0; k < perm.size(); ++k) {
      fold[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(n_folds));
    }
    std::vector<Eigen::Index> pos_in(static_cast<std::size_t>(n_folds), 0);
    std::vector<Eigen::Index> neg_in(static_cast<std::size_t>(n_folds), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      (data.y[i] == 1.0 ? pos_in : neg_in)[static_cast<std::size_t>(fold[static_cast<std::size_t>(i)])]++;
    }
    ok = true;
    for (int f = 0; f < n_folds; ++f) {
      if (npos - pos_in[static_cast<std::size_t>(f)] == 0 ||
          (n - npos) - neg_in[static_cast<std::size_t>(f)] == 0) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) throw cv_error("could not build folds with both classes in every training fold");

  path.fold_auc.setConstant(n_folds, g, std::numeric_limits<double>::quiet_NaN());

  parallel_tasks(n_folds, [&](std::ptrdiff_t f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold[static_cast<std::size_t>(i)] == static_cast<int>(f) ? test_rows : train_rows).push_back(i);
    }
    const Dataset train = subset_rows(data, train_rows);
    const Dataset test = subset_rows(data, test_rows);

    const bool test_both_classes = (test.y.array() == 1.0).any() && (test.y.array() == 0.0).any();
    if (!test_both_classes) return;  // fold unscorable, stays NaN

    const std::vector<FitResult> fits = fit_path(train, path.grid, penw, fold_options);
    for (Eigen::Index k = 0; k < g; ++k) {
      const Eigen::VectorXd s = test.X * fits[static_cast<std::size_t>(k)].theta_hat.coef;
      path.fold_auc(static_cast<Eigen::Index>(f), k) = weighted_auc(s, test.y, test.w);
    }
  });

  path.mean_auc.setConstant(g, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index k = 0; k < g; ++k) {
    double acc = 0.0;
    int cnt = 0;
    for (int f = 0; f < n_folds; ++f) {
      const double v = path.fold_auc(f, k);
      if (std::isfinite(v)) {
        acc += v;
        ++cnt;
      }
    }
    if (cnt > 0) path.mean_auc[k] = acc / cnt;
  }

  // grid is descending, so the first strict maximum is the largest lambda
  Eigen::Index best = -1;
  double best_auc = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < g; ++k) {
    if (std::isfinite(path.mean_auc[k]) && path.mean_auc[k] > best_auc) {
      best_auc = path.mean_auc[k];
      best = k;
    }
  }
  if (best < 0) throw cv_error("no fold produced a scorable AUC");
  path.selected_lambda = path.grid[best];

  double sd = 0.0;
  int cnt = 0;
  for (int f = 0; f < n_folds; ++f) {
    const double v = path.fold_auc(f, best);
    if (std::isfinite(v)) {
      sd += (v - best_auc) * (v - best_auc);
      ++cnt;
    }
  }
  const double se = cnt > 1 ? std::sqrt(sd / (cnt - 1)) / std::sqrt(static_cast<double>(cnt)) : 0.0;
  path.lambda_1se = path.selected_lambda;
  for (Eigen::Index k = 0; k < g; ++k) {
    if (std::isfinite(path.mean_auc[k]) && path.mean_auc[k] >= best_auc - se) {
      path.lambda_1se = path.grid[k];
      break;
    }
  }
  return path;
}

}  // namespace svylasso
