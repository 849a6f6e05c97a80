#include "svylasso/features.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace svylasso {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || lower(cell) == "na";
}

// Fixed yes/no table, case-insensitive.
std::optional<double> parse_yes_no(const std::string& cell) {
  const std::string s = lower(cell);
  if (s == "yes" || s == "y" || s == "true") return 1.0;
  if (s == "no" || s == "n" || s == "false") return 0.0;
  return std::nullopt;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) return std::nullopt;
  return v;
}

[[noreturn]] void cell_error(const std::string& what, std::size_t row, const std::string& column) {
  // rows are reported 1-based counting the header as row 1
  throw std::invalid_argument(what + " at row " + std::to_string(row + 2) + ", column '" +
                              column + "'");
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open CSV file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  CsvTable table;
  std::size_t pos = 0;
  const std::size_t len = content.size();

  // leading metadata lines
  while (pos < len && content[pos] == '#') {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = len;
    std::string line = content.substr(pos + 1, eol - pos - 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == ' ') line.erase(line.begin());
    table.meta.push_back(line);
    pos = eol == len ? len : eol + 1;
  }

  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;

  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    table.rows.push_back(row);
    row.clear();
    row_has_content = false;
  };

  while (pos < len) {
    const char c = content[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < len && content[pos + 1] == '"') {
          field += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else {
      if (c == '"' && field.empty()) {
        in_quotes = true;
        row_has_content = true;
      } else if (c == ',') {
        end_field();
        row_has_content = true;
      } else if (c == '\r') {
        // swallow; the '\n' ends the row
      } else if (c == '\n') {
        if (row_has_content || !field.empty() || !row.empty()) end_row();
      } else {
        field += c;
        row_has_content = true;
      }
    }
    ++pos;
  }
  if (in_quotes) throw std::invalid_argument("unterminated quoted field in " + path);
  if (row_has_content || !field.empty() || !row.empty()) end_row();

  if (table.rows.empty()) throw std::invalid_argument("CSV file has no header row: " + path);
  return table;
}

void write_csv_file(const std::string& path, const std::vector<std::string>& meta,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
  for (const auto& m : meta) out << "# " << m << "\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out << ',';
      out << quote_if_needed(r[k]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void ColumnSpec::validate() const {
  if (outcome_column.empty()) throw std::invalid_argument("outcome column is required");
  std::set<std::string> seen;
  auto add_unique = [&](const std::string& name, const char* role) {
    if (!seen.insert(name).second) {
      throw std::invalid_argument(std::string("duplicate column in mapping (") + role + "): " + name);
    }
  };
  add_unique(outcome_column, "outcome");
  if (!weight_column.empty()) add_unique(weight_column, "weight");
  for (const auto& r : regressor_columns) add_unique(r, "regressor");
}

namespace {

struct RawColumns {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // data rows

  std::size_t index_of(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw std::invalid_argument("column not found in CSV: '" + name + "'");
  }
};

double parse_binary_cell(const std::string& cell, std::size_t row, const std::string& col) {
  if (auto v = parse_number(cell)) {
    if (*v == 0.0 || *v == 1.0) return *v;
    cell_error("non-binary value '" + cell + "'", row, col);
  }
  if (auto v = parse_yes_no(cell)) return *v;
  cell_error("non-binary value '" + cell + "'", row, col);
}

}  // namespace

Dataset load_csv(const std::string& path, const ColumnSpec& spec, LoadReport* report) {
  spec.validate();
  CsvTable table = read_csv_file(path);

  RawColumns raw;
  raw.header = table.rows.front();
  raw.rows.assign(table.rows.begin() + 1, table.rows.end());
  for (auto& r : raw.rows) {
    if (r.size() != raw.header.size()) {
      throw std::invalid_argument("ragged CSV row with " + std::to_string(r.size()) +
                                  " cells, expected " + std::to_string(raw.header.size()));
    }
  }

  // Derived columns are appended to the raw table so they can serve as the
  // outcome or as regressors.
  auto append_derived = [&](const std::string& name, const std::vector<std::string>& sources,
                            bool count) {
    std::vector<std::size_t> idx;
    for (const auto& s : sources) idx.push_back(raw.index_of(s));
    raw.header.push_back(name);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      double acc = 0.0;
      for (std::size_t j : idx) {
        const std::string& cell = raw.rows[r][j];
        if (is_missing(cell)) {
          raw.rows[r].push_back("");
          goto next_row;
        }
        acc += parse_binary_cell(cell, r, raw.header[j]);
      }
      raw.rows[r].push_back(count ? format_double(acc) : format_double(acc > 0.0 ? 1.0 : 0.0));
    next_row:;
    }
  };
  if (spec.bdus) {
    if (spec.bdus->source_columns.size() != 10) {
      throw std::invalid_argument("the usage score needs exactly 10 question columns");
    }
    append_derived(spec.bdus->name, spec.bdus->source_columns, /*count=*/true);
  }
  if (spec.incidence) {
    if (spec.incidence->source_columns.empty()) {
      throw std::invalid_argument("the incidence indicator needs at least one question column");
    }
    append_derived(spec.incidence->name, spec.incidence->source_columns, /*count=*/false);
  }

  const std::size_t y_idx = raw.index_of(spec.outcome_column);
  const bool has_w = !spec.weight_column.empty();
  const std::size_t w_idx = has_w ? raw.index_of(spec.weight_column) : 0;

  struct RegressorPlan {
    std::string name;
    std::size_t idx;
    bool categorical;
    std::vector<std::string> levels;  // non-reference, sorted
    std::string reference;
  };
  std::vector<RegressorPlan> plan;
  for (const auto& name : spec.regressor_columns) {
    RegressorPlan p;
    p.name = name;
    p.idx = raw.index_of(name);
    auto ref = spec.reference_levels.find(name);
    p.categorical = ref != spec.reference_levels.end();
    if (p.categorical) {
      p.reference = ref->second;
      std::set<std::string> levels;
      for (const auto& r : raw.rows) {
        if (!is_missing(r[p.idx])) levels.insert(r[p.idx]);
      }
      levels.erase(p.reference);
      p.levels.assign(levels.begin(), levels.end());
    }
    plan.push_back(std::move(p));
  }

  std::vector<std::string> names;
  for (const auto& p : plan) {
    if (p.categorical) {
      for (const auto& lvl : p.levels) names.push_back(p.name + "=" + lvl);
    } else {
      names.push_back(p.name);
    }
  }
  const std::size_t n_regressors = names.size();

  std::vector<std::size_t> kept;
  Eigen::Index dropped = 0;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    bool missing = is_missing(raw.rows[r][y_idx]) || (has_w && is_missing(raw.rows[r][w_idx]));
    for (const auto& p : plan) {
      missing = missing || is_missing(raw.rows[r][p.idx]);
    }
    if (missing) {
      if (spec.drop_missing_rows) {
        ++dropped;
        continue;
      }
      for (const auto& p : plan) {
        if (is_missing(raw.rows[r][p.idx])) cell_error("missing value", r, p.name);
      }
      if (is_missing(raw.rows[r][y_idx])) cell_error("missing value", r, spec.outcome_column);
      cell_error("missing value", r, spec.weight_column);
    }
    kept.push_back(r);
  }
  if (report) report->rows_dropped = dropped;
  if (kept.empty()) throw std::invalid_argument("no usable rows in " + path);

  const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
  Eigen::VectorXd y(n), w = Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(n_regressors) + 1);
  X.col(0).setOnes();

  for (Eigen::Index out_row = 0; out_row < n; ++out_row) {
    const std::size_t r = kept[static_cast<std::size_t>(out_row)];
    y[out_row] = parse_binary_cell(raw.rows[r][y_idx], r, spec.outcome_column);
    if (has_w) {
      const auto v = parse_number(raw.rows[r][w_idx]);
      if (!v) cell_error("unparseable weight '" + raw.rows[r][w_idx] + "'", r, spec.weight_column);
      if (!(*v > 0.0)) cell_error("nonpositive weight '" + raw.rows[r][w_idx] + "'", r, spec.weight_column);
      w[out_row] = *v;
    }
    Eigen::Index col = 1;
    for (const auto& p : plan) {
      const std::string& cell = raw.rows[r][p.idx];
      if (p.categorical) {
        for (const auto& lvl : p.levels) {
          X(out_row, col++) = cell == lvl ? 1.0 : 0.0;
        }
      } else {
        auto v = parse_number(cell);
        if (!v) v = parse_yes_no(cell);
        if (!v) cell_error("unparseable numeric cell '" + cell + "'", r, p.name);
        X(out_row, col++) = *v;
      }
    }
  }

  Dataset d = Dataset::make(std::move(y), std::move(X), std::move(w), std::move(names));
  d.outcome_name = spec.outcome_column;
  d.weight_name = spec.weight_column;
  return d;
}

void write_csv(const Dataset& data, const std::string& path,
               const std::vector<std::string>& meta_lines) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  header.push_back(data.outcome_name);
  const bool has_w = !data.weight_name.empty();
  if (has_w) header.push_back(data.weight_name);
  for (const auto& c : data.column_names) header.push_back(c);
  rows.push_back(std::move(header));

  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    row.push_back(format_double(data.y[i]));
    if (has_w) row.push_back(format_double(data.w[i]));
    for (Eigen::Index j = 1; j < data.X.cols(); ++j) {
      row.push_back(format_double(data.X(i, j)));
    }
    rows.push_back(std::move(row));
  }
  write_csv_file(path, meta_lines, rows);
}

Eigen::VectorXi build_bdus(const Eigen::MatrixXd& responses) {
  if (responses.cols() != 10) {
    throw std::invalid_argument("usage score requires exactly 10 binary columns, got " +
                                std::to_string(responses.cols()));
  }
  Eigen::VectorXi out(responses.rows());
  for (Eigen::Index i = 0; i < responses.rows(); ++i) {
    int acc = 0;
    for (Eigen::Index j = 0; j < 10; ++j) {
      const double v = responses(i, j);
      if (v != 0.0 && v != 1.0) {
        throw std::invalid_argument("non-binary response at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
      }
      acc += static_cast<int>(v);
    }
    out[i] = acc;
  }
  return out;
}

Eigen::VectorXd build_incidence(const Eigen::MatrixXd& responses) {
  if (responses.cols() < 1) throw std::invalid_argument("incidence requires at least one column");
  Eigen::VectorXd out(responses.rows());
  for (Eigen::Index i = 0; i < responses.rows(); ++i) {
    double any = 0.0;
    for (Eigen::Index j = 0; j < responses.cols(); ++j) {
      const double v = responses(i, j);
      if (v != 0.0 && v != 1.0) {
        throw std::invalid_argument("non-binary response at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
      }
      if (v == 1.0) any = 1.0;
    }
    out[i] = any;
  }
  return out;
}

std::pair<Dataset, ExpansionMap> expand_interactions(const Dataset& data, int degree,
                                                     std::vector<std::string> numeric_columns) {
  if (degree != 2) throw std::invalid_argument("only degree 2 expansion is supported");
  if (data.expansion) throw std::invalid_argument("dataset is already expanded");

  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();

  std::vector<char> numeric(static_cast<std::size_t>(p), 0);
  if (numeric_columns.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto col = data.X.col(j + 1);
      const bool binary = ((col.array() == 0.0) || (col.array() == 1.0)).all();
      numeric[static_cast<std::size_t>(j)] = binary ? 0 : 1;
    }
  } else {
    for (const auto& name : numeric_columns) {
      const auto it = std::find(data.column_names.begin(), data.column_names.end(), name);
      if (it == data.column_names.end()) {
        throw std::invalid_argument("numeric column not in dataset: '" + name + "'");
      }
      numeric[static_cast<std::size_t>(it - data.column_names.begin())] = 1;
    }
  }

  ExpansionMap em;
  em.base_regressors = static_cast<int>(p);
  std::vector<std::pair<int, int>> pairs;  // design indices, products then squares
  for (Eigen::Index i = 1; i <= p; ++i) {
    for (Eigen::Index j = i + 1; j <= p; ++j) {
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  for (Eigen::Index j = 1; j <= p; ++j) {
    if (numeric[static_cast<std::size_t>(j - 1)]) {
      pairs.emplace_back(static_cast<int>(j), static_cast<int>(j));
    }
  }

  auto name_of = [&](int design_col) -> std::string {
    return data.column_names[static_cast<std::size_t>(design_col - 1)];
  };

  Eigen::MatrixXd X(n, 1 + p + static_cast<Eigen::Index>(pairs.size()));
  X.leftCols(1 + p) = data.X;
  std::vector<std::string> names = data.column_names;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [u, v] = pairs[t];
    X.col(1 + p + static_cast<Eigen::Index>(t)) = data.X.col(u).cwiseProduct(data.X.col(v));
    const std::string nm = u == v ? name_of(u) + "^2" : name_of(u) + ":" + name_of(v);
    names.push_back(nm);
    em.output_columns.push_back(nm);
    em.parentage.emplace_back(u, v);
  }

  Dataset out = Dataset::make(data.y, std::move(X), data.w, std::move(names));
  out.outcome_name = data.outcome_name;
  out.weight_name = data.weight_name;
  out.expansion = em;
  return {std::move(out), std::move(em)};
}

ColumnSpec column_spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open mapping file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid JSON in mapping file " + path + ": " + e.what());
  }

  ColumnSpec spec;
  spec.outcome_column = j.at("outcome").get<std::string>();
  if (j.contains("weight")) spec.weight_column = j["weight"].get<std::string>();
  if (j.contains("regressors")) {
    spec.regressor_columns = j["regressors"].get<std::vector<std::string>>();
  }
  if (j.contains("reference_levels")) {
    for (auto it = j["reference_levels"].begin(); it != j["reference_levels"].end(); ++it) {
      spec.reference_levels[it.key()] = it.value().get<std::string>();
    }
  }
  if (j.contains("numeric")) {
    spec.numeric_columns = j["numeric"].get<std::vector<std::string>>();
  }
  if (j.contains("bdus")) {
    DerivedCount d;
    d.name = j["bdus"].at("name").get<std::string>();
    d.source_columns = j["bdus"].at("columns").get<std::vector<std::string>>();
    spec.bdus = std::move(d);
  }
  if (j.contains("incidence")) {
    DerivedAny d;
    d.name = j["incidence"].at("name").get<std::string>();
    d.source_columns = j["incidence"].at("columns").get<std::vector<std::string>>();
    spec.incidence = std::move(d);
  }
  if (j.contains("drop_missing_rows")) spec.drop_missing_rows = j["drop_missing_rows"].get<bool>();
  spec.validate();
  return spec;
}

}  // namespace svylasso
