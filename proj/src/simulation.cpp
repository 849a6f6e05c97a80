#include "svylasso/simulation.hpp"

#include "svylasso/errors.hpp"
#include "svylasso/marginal_effects.hpp"
#include "svylasso/parallel.hpp"
#include "svylasso/rng.hpp"
#include "svylasso/version.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace svylasso {

namespace {

Eigen::VectorXd default_theta0(int p) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(p + 1);
  for (int k = 0; k <= std::min(p, 2); ++k) t[k] = 1.0;
  return t;
}

constexpr std::uint64_t kPopulationStream = 0x506F50ULL;

}  // namespace

void SimulationConfig::validate() const {
  if (strata_sizes.empty()) throw std::invalid_argument("at least one stratum is required");
  const int total = std::accumulate(strata_sizes.begin(), strata_sizes.end(), 0);
  if (total != population_size) {
    throw std::invalid_argument("strata sizes must sum to the population size");
  }
  if (weights_per_stratum.size() != strata_sizes.size()) {
    throw std::invalid_argument("one weight per stratum is required");
  }
  for (double w : weights_per_stratum) {
    if (!(w > 0.0)) throw std::invalid_argument("stratum weights must be positive");
  }
  if (draw_plans.empty()) throw std::invalid_argument("at least one draw plan is required");
  for (const auto& plan : draw_plans) {
    if (plan.size() != strata_sizes.size()) {
      throw std::invalid_argument("one draw count per stratum is required");
    }
    for (int d : plan) {
      if (d < 1) throw std::invalid_argument("draw counts must be positive");
    }
  }
  if (p_over_n.empty()) throw std::invalid_argument("p/n grid must be nonempty");
  for (const auto& plan : draw_plans) {
    const int n = std::accumulate(plan.begin(), plan.end(), 0);
    for (double ratio : p_over_n) {
      const double p = ratio * n;
      if (std::abs(p - std::round(p)) > 1e-9 || std::round(p) < 1.0) {
        throw std::invalid_argument("p/n grid must give positive integer p for n = " +
                                    std::to_string(n));
      }
    }
  }
  if (replications < 1) throw std::invalid_argument("replications must be positive");
  if (!(nominal_level > 0.0 && nominal_level < 1.0)) {
    throw std::invalid_argument("nominal level must be in (0, 1)");
  }
  if (cv_folds < 2) throw std::invalid_argument("cv folds must be at least 2");
  if (cv_grid_size < 1) throw std::invalid_argument("cv grid size must be positive");

  // The default design's weights are the stratum inclusion ratios N_h/n_h
  // normalized to sum 1; keep that contract pinned.
  const SimulationConfig defaults;
  if (strata_sizes == defaults.strata_sizes && draw_plans == defaults.draw_plans &&
      weights_per_stratum == defaults.weights_per_stratum) {
    for (const auto& plan : draw_plans) {
      std::vector<double> ratio(strata_sizes.size());
      double total_ratio = 0.0;
      for (std::size_t h = 0; h < strata_sizes.size(); ++h) {
        ratio[h] = static_cast<double>(strata_sizes[h]) / plan[h];
        total_ratio += ratio[h];
      }
      for (std::size_t h = 0; h < strata_sizes.size(); ++h) {
        if (std::abs(ratio[h] / total_ratio - weights_per_stratum[h]) > 1e-12) {
          throw std::invalid_argument("default design weights must be proportional to N_h/n_h");
        }
      }
    }
  }
}

std::vector<std::pair<int, int>> SimulationConfig::cells() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& plan : draw_plans) {
    const int n = std::accumulate(plan.begin(), plan.end(), 0);
    for (double ratio : p_over_n) {
      out.emplace_back(n, static_cast<int>(std::llround(ratio * n)));
    }
  }
  return out;
}

Population generate_population(const SimulationConfig& config, int p, std::uint64_t pop_seed) {
  if (p < 1) throw std::invalid_argument("p must be positive");
  const int N = config.population_size;

  Population pop;
  pop.seed = pop_seed;
  pop.theta0 = (config.theta0.size() == p + 1) ? config.theta0 : default_theta0(p);
  pop.X.resize(N, p + 1);
  pop.X.col(0).setOnes();
  pop.y.resize(N);
  pop.stratum.resize(static_cast<std::size_t>(N));

  Rng rng(pop_seed);
  for (int i = 0; i < N; ++i) {
    for (int j = 1; j <= p; ++j) {
      pop.X(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    const double t = pop.X.row(i).dot(pop.theta0);
    pop.y[i] = rng.bernoulli(logistic(t)) ? 1.0 : 0.0;
  }

  int block = 0, offset = 0;
  for (int h = 0; h < static_cast<int>(config.strata_sizes.size()); ++h) {
    for (int k = 0; k < config.strata_sizes[static_cast<std::size_t>(h)]; ++k) {
      pop.stratum[static_cast<std::size_t>(offset + k)] = h;
    }
    offset += config.strata_sizes[static_cast<std::size_t>(h)];
    ++block;
  }
  return pop;
}

Dataset draw_stratified_sample(const Population& pop, const SimulationConfig& config,
                               const std::vector<int>& draws, std::uint64_t replication_seed) {
  if (draws.size() != config.strata_sizes.size()) {
    throw std::invalid_argument("one draw count per stratum is required");
  }
  const int n = std::accumulate(draws.begin(), draws.end(), 0);
  const Eigen::Index q = pop.X.cols();

  Dataset d;
  d.y.resize(n);
  d.w.resize(n);
  d.X.resize(n, q);
  for (Eigen::Index j = 1; j < q; ++j) {
    d.column_names.push_back("x" + std::to_string(j));
  }
  d.weight_name = "w";

  Rng rng(replication_seed);
  int row = 0, start = 0;
  for (std::size_t h = 0; h < draws.size(); ++h) {
    const int Nh = config.strata_sizes[h];
    for (int k = 0; k < draws[h]; ++k) {
      const int idx = start + static_cast<int>(rng.below(static_cast<std::uint64_t>(Nh)));
      d.X.row(row) = pop.X.row(idx);
      d.y[row] = pop.y[idx];
      d.w[row] = config.weights_per_stratum[h];
      ++row;
    }
    start += Nh;
  }
  return d;
}

namespace {

struct RepOutcome {
  bool reject_db_theta = false, reject_db_ame = false;
  bool reject_t_theta = false, reject_t_ame = false;
  bool fail_db_theta = false, fail_db_ame = false;
  bool fail_t_theta = false, fail_t_ame = false;
};

RepOutcome run_replication(const Dataset& data, const SimulationConfig& config,
                           std::uint64_t cv_seed) {
  RepOutcome out;
  const double level = config.nominal_level;

  // debiased test branch; one fit shared by both hypotheses
  bool have_fit = false;
  FitResult fit;
  try {
    double lam = config.fixed_lambda;
    if (!config.fixed_lambda_mode) {
      lam = cv_select_lambda(data, config.cv_folds, config.cv_grid_size, cv_seed).selected_lambda;
    }
    PenaltySpec pen;
    pen.lambda = lam;
    fit = fit_penalized(data, pen);
    if (!fit.converged) throw std::runtime_error("penalized fit did not converge");
    have_fit = true;
  } catch (const std::exception&) {
    out.fail_db_theta = out.fail_db_ame = true;
  }

  if (have_fit) {
    DebiasOptions opts;
    opts.ridge_on_singular = true;
    try {
      const DebiasedEstimate est = debias_theta(data, fit, opts);
      const auto [z, pv] = wald_test_component(est, 1, config.null_theta);
      (void)z;
      out.reject_db_theta = pv < level;
    } catch (const std::exception&) {
      out.fail_db_theta = true;
    }
    try {
      const DebiasedEstimate est = debias_functional(data, fit, ame_functional(data, 1), opts);
      const auto [z, pv] = wald_test_component(est, 0, config.null_ame);
      (void)z;
      out.reject_db_ame = pv < level;
    } catch (const std::exception&) {
      out.fail_db_ame = true;
    }
  }

  // survey t-test branch on the same sample
  try {
    const MleFit mle = fit_mle(data);
    if (!mle.converged) throw separation_error("unpenalized MLE did not converge");
    try {
      const auto [t, pv] = svy_mle_ttest(data, mle, config.null_theta, 1, TestTarget::coefficient);
      (void)t;
      out.reject_t_theta = pv < level;
    } catch (const std::exception&) {
      out.fail_t_theta = true;
    }
    try {
      const auto [t, pv] = svy_mle_ttest(data, mle, config.null_ame, 1, TestTarget::ame);
      (void)t;
      out.reject_t_ame = pv < level;
    } catch (const std::exception&) {
      out.fail_t_ame = true;
    }
  } catch (const std::exception&) {
    out.fail_t_theta = out.fail_t_ame = true;
  }
  return out;
}

SimulationRow make_row(int n, int p, const std::string& hyp, const std::string& test, long rej,
                       int fails, int reps) {
  SimulationRow row;
  row.n = n;
  row.p = p;
  row.hypothesis = hyp;
  row.test = test;
  row.rejections = rej;
  row.replications = reps;
  row.failures = fails;
  const int denom = reps - fails;
  row.frequency = denom > 0 ? static_cast<double>(rej) / denom : 0.0;
  row.unreliable = fails > reps / 10;
  return row;
}

}  // namespace

SimulationReport run_study(const SimulationConfig& config,
                           const std::function<void(const std::string&)>& progress) {
  config.validate();

  SimulationReport report;
  report.config = config;

  std::map<int, Population> populations;
  for (const auto& [n, p] : config.cells()) {
    (void)n;
    if (!populations.count(p)) {
      const std::uint64_t pop_seed = derive_seed(config.seed, kPopulationStream, p);
      populations.emplace(p, generate_population(config, p, pop_seed));
      report.population_seeds.emplace_back(p, pop_seed);
    }
  }

  for (const auto& plan : config.draw_plans) {
    const int n = std::accumulate(plan.begin(), plan.end(), 0);
    for (double ratio : config.p_over_n) {
      const int p = static_cast<int>(std::llround(ratio * n));
      const Population& pop = populations.at(p);
      const int reps = config.replications;

      std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
      parallel_tasks(reps, [&](std::ptrdiff_t r) {
        const std::uint64_t sample_seed =
            derive_seed(config.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p),
                        2 * static_cast<std::uint64_t>(r));
        const std::uint64_t cv_seed =
            derive_seed(config.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p),
                        2 * static_cast<std::uint64_t>(r) + 1);
        const Dataset sample = draw_stratified_sample(pop, config, plan, sample_seed);
        outcomes[static_cast<std::size_t>(r)] = run_replication(sample, config, cv_seed);
      });

      long rej_db_t = 0, rej_db_a = 0, rej_t_t = 0, rej_t_a = 0;
      int fail_db_t = 0, fail_db_a = 0, fail_t_t = 0, fail_t_a = 0;
      for (const RepOutcome& o : outcomes) {
        rej_db_t += o.reject_db_theta && !o.fail_db_theta;
        rej_db_a += o.reject_db_ame && !o.fail_db_ame;
        rej_t_t += o.reject_t_theta && !o.fail_t_theta;
        rej_t_a += o.reject_t_ame && !o.fail_t_ame;
        fail_db_t += o.fail_db_theta;
        fail_db_a += o.fail_db_ame;
        fail_t_t += o.fail_t_theta;
        fail_t_a += o.fail_t_ame;
      }

      report.rows.push_back(make_row(n, p, "theta", "DB", rej_db_t, fail_db_t, reps));
      report.rows.push_back(make_row(n, p, "theta", "t_svy", rej_t_t, fail_t_t, reps));
      report.rows.push_back(make_row(n, p, "ame", "DB", rej_db_a, fail_db_a, reps));
      report.rows.push_back(make_row(n, p, "ame", "t_svy", rej_t_a, fail_t_a, reps));

      if (progress) {
        std::ostringstream msg;
        msg << "cell n=" << n << " p=" << p << " done: DB theta "
            << report.rows[report.rows.size() - 4].frequency << ", t_svy theta "
            << report.rows[report.rows.size() - 3].frequency;
        progress(msg.str());
      }
    }
  }
  return report;
}

namespace {

std::string format_frequency(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string report_to_csv(const SimulationReport& report) {
  std::ostringstream os;
  os << "# svylasso version=" << SVYLASSO_VERSION << " seed=" << report.config.seed
     << " replications=" << report.config.replications
     << " nominal_level=" << report.config.nominal_level
     << " cv_folds=" << report.config.cv_folds << " cv_grid_size=" << report.config.cv_grid_size
     << " mode=" << (report.config.fixed_lambda_mode ? "fixed-lambda(non-canonical)" : "cv")
     << "\n";
  os << "n,p,hypothesis,test,rejections,reps,failures,frequency\n";
  for (const auto& r : report.rows) {
    os << r.n << ',' << r.p << ',' << r.hypothesis << ',' << r.test << ',' << r.rejections << ','
       << r.replications << ',' << r.failures << ',' << format_frequency(r.frequency) << "\n";
  }
  return os.str();
}

std::string report_to_json_string(const SimulationReport& report) {
  nlohmann::json j;
  j["version"] = SVYLASSO_VERSION;
  j["mode"] = report.config.fixed_lambda_mode ? "fixed-lambda(non-canonical)" : "cv";

  nlohmann::json cfg;
  cfg["population_size"] = report.config.population_size;
  cfg["strata_sizes"] = report.config.strata_sizes;
  cfg["draw_plans"] = report.config.draw_plans;
  cfg["weights_per_stratum"] = report.config.weights_per_stratum;
  cfg["p_over_n"] = report.config.p_over_n;
  cfg["replications"] = report.config.replications;
  cfg["nominal_level"] = report.config.nominal_level;
  cfg["null_theta"] = report.config.null_theta;
  cfg["null_ame"] = report.config.null_ame;
  cfg["seed"] = report.config.seed;
  cfg["cv_folds"] = report.config.cv_folds;
  cfg["cv_grid_size"] = report.config.cv_grid_size;
  if (report.config.fixed_lambda_mode) cfg["fixed_lambda"] = report.config.fixed_lambda;
  j["config"] = cfg;

  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& [p, s] : report.population_seeds) {
    seeds.push_back({{"p", p}, {"seed", s}});
  }
  j["population_seeds"] = seeds;

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"n", r.n},
                    {"p", r.p},
                    {"hypothesis", r.hypothesis},
                    {"test", r.test},
                    {"rejections", r.rejections},
                    {"reps", r.replications},
                    {"failures", r.failures},
                    {"frequency", r.frequency},
                    {"unreliable", r.unreliable}});
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace svylasso
