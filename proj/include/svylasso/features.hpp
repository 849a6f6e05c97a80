#pragma once

#include "svylasso/dataset.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace svylasso {

// Row sum of binary question columns (the usage-score construction).
struct DerivedCount {
  std::string name;
  std::vector<std::string> source_columns;
};

// Row-wise OR of binary question columns (the incidence construction).
struct DerivedAny {
  std::string name;
  std::vector<std::string> source_columns;
};

struct ColumnSpec {
  std::string outcome_column;
  std::string weight_column;  // empty: all weights 1
  std::vector<std::string> regressor_columns;
  std::map<std::string, std::string> reference_levels;  // categorical column -> reference level
  std::vector<std::string> numeric_columns;             // squared on expansion
  std::optional<DerivedCount> bdus;
  std::optional<DerivedAny> incidence;
  bool drop_missing_rows = false;

  void validate() const;
};

struct LoadReport {
  Eigen::Index rows_dropped = 0;
};

// RFC 4180 with a header row; cells "" and "NA" count as missing. Leading
// lines starting with '#' are metadata and are skipped, so emitted tables
// stay loadable. Categorical columns are one-hot encoded against their
// reference level; an intercept column is prepended.
Dataset load_csv(const std::string& path, const ColumnSpec& spec, LoadReport* report = nullptr);

// Writes outcome, weight (when named) and regressor columns. Numbers use the
// shortest round-trip formatting, so load_csv(write_csv(d)) == d exactly.
void write_csv(const Dataset& data, const std::string& path,
               const std::vector<std::string>& meta_lines = {});

// Count of affirmative answers across exactly ten binary columns; in [0, 10].
Eigen::VectorXi build_bdus(const Eigen::MatrixXd& responses);

// 1 when any of k >= 1 binary columns is 1.
Eigen::VectorXd build_incidence(const Eigen::MatrixXd& responses);

// Appends all pairwise products of the regressors, in lexicographic (i, j)
// order with i < j, plus squares of the columns named numeric (binary squares
// are redundant). Only degree 2 is supported; expanding an already-expanded
// dataset is rejected. With an empty numeric list, non-binary columns are
// detected from the data.
std::pair<Dataset, ExpansionMap> expand_interactions(const Dataset& data, int degree,
                                                     std::vector<std::string> numeric_columns = {});

ColumnSpec column_spec_from_json_file(const std::string& path);

// Low-level CSV primitives shared with the CLI.
struct CsvTable {
  std::vector<std::string> meta;                // leading '#' lines, prefix stripped
  std::vector<std::vector<std::string>> rows;   // header row first
};

CsvTable read_csv_file(const std::string& path);
void write_csv_file(const std::string& path, const std::vector<std::string>& meta,
                    const std::vector<std::vector<std::string>>& rows);
std::string format_double(double v);

}  // namespace svylasso
