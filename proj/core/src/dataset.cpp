#include "bavamio/dataset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bavamio {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
  std::string cell = trim(raw);
  if (cell.empty())
    throw DataError("empty cell at data row " + std::to_string(row) + ", column '" + column + "'");
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw DataError("non-numeric cell '" + cell + "' at data row " + std::to_string(row) +
                    ", column '" + column + "'");
  if (!std::isfinite(value))
    throw DataError("non-finite cell at data row " + std::to_string(row) + ", column '" +
                    column + "'");
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("file '" + path + "' is empty");
  RawTable table;
  for (auto& name : split_csv_line(line)) table.header.push_back(trim(name));
  if (table.header.empty()) throw DataError("file '" + path + "' has an empty header");

  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    ++row_index;
    auto cells = split_csv_line(line);
    if (cells.size() != table.header.size())
      throw DataError("ragged row " + std::to_string(row_index) + " in '" + path + "': expected " +
                      std::to_string(table.header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    std::vector<double> parsed(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      parsed[c] = parse_cell(cells[c], row_index, table.header[c]);
    table.rows.push_back(std::move(parsed));
  }
  if (table.rows.empty()) throw DataError("file '" + path + "' has no data rows");
  return table;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() != y.size())
    throw DataError("design has " + std::to_string(x.rows()) + " rows but response has " +
                    std::to_string(y.size()) + " entries");
  if (!x.allFinite() || !y.allFinite()) throw DataError("dataset contains non-finite entries");
  if (!column_names.empty() && static_cast<Eigen::Index>(column_names.size()) != x.cols())
    throw DataError("column name count does not match covariate count");
  if (standardized) {
    if (!standardize_record) throw DataError("standardized dataset without a record");
    if ((standardize_record->column_scales.array() <= 0.0).any())
      throw DataError("standardize record has a non-positive scale");
  }
}

Dataset load_dataset(const std::string& path, const std::string& response_column) {
  RawTable table = read_csv(path);
  const auto n_cols = table.header.size();

  std::size_t response_idx = n_cols;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (table.header[c] == response_column) {
      response_idx = c;
      break;
    }
  }
  if (response_idx == n_cols) {
    // Fall back to a 1-based column index.
    int idx = 0;
    auto t = trim(response_column);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
    if (ec == std::errc() && ptr == t.data() + t.size() && idx >= 1 &&
        static_cast<std::size_t>(idx) <= n_cols) {
      response_idx = static_cast<std::size_t>(idx - 1);
    } else {
      throw DataError("response column '" + response_column + "' not found in '" + path + "'");
    }
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(n_cols - 1);
  if (p == 0) throw DataError("file '" + path + "' has no covariate columns");

  Dataset d;
  d.x.resize(n, p);
  d.y.resize(n);
  d.column_names.reserve(static_cast<std::size_t>(p));
  for (std::size_t c = 0; c < n_cols; ++c)
    if (c != response_idx) d.column_names.push_back(table.header[c]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    d.y[i] = row[response_idx];
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < n_cols; ++c)
      if (c != response_idx) d.x(i, k++) = row[c];
  }
  d.validate();
  return d;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path, std::vector<std::string>* names) {
  RawTable table = read_csv(path);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(table.header.size());
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      m(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (names) *names = table.header;
  return m;
}

std::pair<Dataset, StandardizeRecord> standardize(const Dataset& d, StandardizeOptions opt) {
  d.validate();
  const auto n = d.n_samples();
  const auto p = d.n_covariates();
  if (n < 2) throw DataError("standardization needs at least 2 samples");

  StandardizeRecord rec;
  rec.column_means.resize(p);
  rec.column_scales.resize(p);
  Dataset out = d;
  for (Eigen::Index j = 0; j < p; ++j) {
    double mean = d.x.col(j).mean();
    double var = (d.x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
    double scale = std::sqrt(var);
    if (scale <= 0.0) {
      if (!opt.skip_constant) {
        std::string name = d.column_names.empty()
                               ? "column " + std::to_string(j + 1)
                               : "column '" + d.column_names[static_cast<std::size_t>(j)] + "'";
        throw DataError(name + " is constant; standardization is undefined "
                               "(use skip-constant mode to keep it frozen at zero)");
      }
      scale = 1.0;
    }
    rec.column_means[j] = mean;
    rec.column_scales[j] = scale;
    out.x.col(j) = (d.x.col(j).array() - mean) / scale;
  }
  rec.response_centered = opt.center_response;
  if (opt.center_response) {
    rec.response_center = d.y.mean();
    out.y = d.y.array() - rec.response_center;
  }
  out.standardized = true;
  out.standardize_record = rec;
  return {std::move(out), rec};
}

Dataset unstandardize(const Dataset& d, const StandardizeRecord& rec) {
  Dataset out = d;
  for (Eigen::Index j = 0; j < d.n_covariates(); ++j)
    out.x.col(j) = d.x.col(j).array() * rec.column_scales[j] + rec.column_means[j];
  if (rec.response_centered) out.y = d.y.array() + rec.response_center;
  out.standardized = false;
  out.standardize_record.reset();
  return out;
}

OriginalScaleFit to_original_scale(const Eigen::VectorXd& beta_standardized,
                                   const StandardizeRecord& rec) {
  OriginalScaleFit fit;
  fit.beta = beta_standardized.array() / rec.column_scales.array();
  fit.intercept = rec.response_center - fit.beta.dot(rec.column_means);
  return fit;
}

void Hyperparameters::validate() const {
  if (!(lambda >= 0.0)) throw DataError("lambda must be >= 0");
  if (!(tau1 > 0.0) || !(tau2 > 0.0)) throw DataError("tau1 and tau2 must be > 0");
  if (!(tau3 > 0.0 && tau3 < 1.0)) throw DataError("tau3 must lie in (0, 1)");
  if (grid_size < 2) throw DataError("grid_size must be >= 2");
}

Hyperparameters Hyperparameters::defaults_for(Eigen::Index n, Eigen::Index p) {
  Hyperparameters h;
  double dn = static_cast<double>(n);
  double dp = static_cast<double>(p);
  h.lambda = 1.0 / std::sqrt(dn);
  h.tau1 = dp * std::log(dp) / std::sqrt(dn) + 1.0;
  h.tau2 = h.tau1 - 1.0;
  return h;
}

Eigen::VectorXi support_indicator(const Eigen::VectorXd& beta) {
  Eigen::VectorXi gamma(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) gamma[j] = beta[j] != 0.0 ? 1 : 0;
  return gamma;
}

std::vector<Eigen::Index> support_set(const Eigen::VectorXd& beta) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) s.push_back(j);
  return s;
}

}  // namespace bavamio
