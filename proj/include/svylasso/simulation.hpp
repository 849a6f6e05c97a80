#pragma once

#include "svylasso/cross_validation.hpp"
#include "svylasso/debias.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace svylasso {

// Stratified finite-population Monte Carlo for the empirical size of the
// debiased Wald test against the survey t-test baseline.
struct SimulationConfig {
  int population_size = 10000;
  std::vector<int> strata_sizes{1000, 2000, 3000, 4000};
  std::vector<std::vector<int>> draw_plans{{50, 50, 50, 50}, {100, 100, 100, 100}};
  std::vector<double> weights_per_stratum{0.1, 0.2, 0.3, 0.4};
  std::vector<double> p_over_n{0.01, 0.025, 0.05, 0.1, 0.25, 0.5};
  Eigen::VectorXd theta0;  // empty: (1, 1, 1, 0, ...) sized per p
  int replications = 1000;
  double nominal_level = 0.05;
  double null_theta = 1.0;
  double null_ame = 0.11;
  std::uint64_t seed = 1;
  int cv_folds = 10;
  int cv_grid_size = 100;
  bool fixed_lambda_mode = false;  // smoke mode; reports are labeled non-canonical
  double fixed_lambda = 0.0;

  void validate() const;
  std::vector<std::pair<int, int>> cells() const;  // (n, p) per draw plan x ratio
};

struct Population {
  Eigen::MatrixXd X;  // N x (p+1)
  Eigen::VectorXd y;
  std::vector<int> stratum;  // contiguous blocks
  Eigen::VectorXd theta0;
  std::uint64_t seed = 0;
};

// x_ij ~ Bernoulli(0.5), y_i ~ Bernoulli(logistic(x_i' theta0)); one
// population per (p, seed), shared across sample sizes.
Population generate_population(const SimulationConfig& config, int p, std::uint64_t pop_seed);

// With-replacement draws per stratum; each row carries its stratum weight.
Dataset draw_stratified_sample(const Population& pop, const SimulationConfig& config,
                               const std::vector<int>& draws, std::uint64_t replication_seed);

struct SimulationRow {
  int n = 0;
  int p = 0;
  std::string hypothesis;  // "theta" or "ame"
  std::string test;        // "DB" or "t_svy"
  long rejections = 0;
  int replications = 0;  // configured count
  int failures = 0;      // excluded from the denominator
  double frequency = 0.0;
  bool unreliable = false;  // failures > 10% of replications
};

struct SimulationReport {
  SimulationConfig config;
  std::vector<SimulationRow> rows;
  std::vector<std::pair<int, std::uint64_t>> population_seeds;  // per p
};

// Replications run as independent tasks on derived seed streams and reduce in
// replication order: identical seeds give bit-identical reports for any
// worker count. DB and t_svy are evaluated on the same samples.
SimulationReport run_study(const SimulationConfig& config,
                           const std::function<void(const std::string&)>& progress = {});

std::string report_to_csv(const SimulationReport& report);
std::string report_to_json_string(const SimulationReport& report);

}  // namespace svylasso
