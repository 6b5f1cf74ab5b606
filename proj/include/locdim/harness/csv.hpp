#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../baselines/predictor.hpp"
#include "../fit.hpp"
#include "../rng.hpp"

namespace locdim {

enum class Normalization { none, minmax };

struct IngestResult {
  Dataset data;
  std::vector<std::string> feature_names;
  std::string target_name;
  long rows_read = 0;
  long rows_dropped = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// Splits one CSV record; double quotes group a field and "" escapes a quote.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline bool parse_number(const std::string& s, double& v) {
  std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  errno = 0;
  v = std::strtod(t.c_str(), &end);
  return errno == 0 && end == t.c_str() + t.size() && std::isfinite(v);
}

}  // namespace detail

// Reads a comma-separated file with a header row. Empty feature list = every
// column except the target. Rows with an unparseable selected cell are dropped.
inline IngestResult ingest_csv(std::istream& in, const std::string& target_column,
                               std::vector<std::string> feature_columns, Normalization norm) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV input is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM
  auto header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  auto col_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("missing column '" + name + "'");
    return static_cast<size_t>(it - header.begin());
  };
  size_t ycol = col_of(target_column);
  if (feature_columns.empty())
    for (const auto& h : header)
      if (h != target_column) feature_columns.push_back(h);
  std::vector<size_t> xcols;
  for (const auto& f : feature_columns) xcols.push_back(col_of(f));

  IngestResult res;
  res.feature_names = feature_columns;
  res.target_name = target_column;
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty() || line == "\r") continue;
    ++res.rows_read;
    auto cells = detail::split_csv_line(line);
    std::vector<double> row(xcols.size());
    double y = 0;
    bool ok = ycol < cells.size() && detail::parse_number(cells[ycol], y);
    for (size_t k = 0; ok && k < xcols.size(); ++k)
      ok = xcols[k] < cells.size() && detail::parse_number(cells[xcols[k]], row[k]);
    if (!ok) {
      ++res.rows_dropped;
      continue;
    }
    rows.push_back(std::move(row));
    ys.push_back(y);
  }
  if (rows.empty()) throw std::invalid_argument("CSV has no usable rows");
  res.data.X.resize(static_cast<long>(rows.size()), static_cast<long>(xcols.size()));
  res.data.Y.resize(static_cast<long>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < xcols.size(); ++j) res.data.X(i, j) = rows[i][j];
    res.data.Y(i) = ys[i];
  }
  if (norm == Normalization::minmax) {
    for (long j = 0; j < res.data.X.cols(); ++j) {
      double lo = res.data.X.col(j).minCoeff(), hi = res.data.X.col(j).maxCoeff();
      if (hi > lo) {
        res.data.X.col(j) = (res.data.X.col(j).array() - lo) / (hi - lo);
      } else {
        res.data.X.col(j).setZero();
        res.warnings.push_back("column '" + feature_columns[j] + "' is constant; mapped to 0");
      }
    }
  }
  if (res.rows_dropped > 0)
    res.warnings.push_back(std::to_string(res.rows_dropped) + " rows dropped for non-numeric cells");
  return res;
}

inline IngestResult ingest_csv(const std::string& path, const std::string& target_column,
                               const std::vector<std::string>& feature_columns, Normalization norm) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return ingest_csv(in, target_column, feature_columns, norm);
}

inline Normalization parse_normalization(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "minmax") return Normalization::minmax;
  throw std::invalid_argument("normalization must be 'none' or 'minmax'");
}

// Shuffles the rows with a seeded permutation, keeps the first n_fit rows for
// fitting (learning plus testing split) and the rest for error evaluation.
inline std::pair<Dataset, Dataset> real_data_split(const Dataset& all, long n_fit, std::uint64_t seed) {
  if (n_fit < 2 || n_fit >= all.n()) throw std::invalid_argument("n_fit must be in [2, n)");
  std::vector<long> idx(all.n());
  for (long i = 0; i < all.n(); ++i) idx[i] = i;
  auto rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  Dataset fit{Eigen::MatrixXd(n_fit, all.d()), Eigen::VectorXd(n_fit)};
  Dataset rest{Eigen::MatrixXd(all.n() - n_fit, all.d()), Eigen::VectorXd(all.n() - n_fit)};
  for (long i = 0; i < all.n(); ++i) {
    Dataset& dst = i < n_fit ? fit : rest;
    long r = i < n_fit ? i : i - n_fit;
    dst.X.row(r) = all.X.row(idx[i]);
    dst.Y(r) = all.Y(idx[i]);
  }
  return {fit, rest};
}

// Held-out squared error divided by that of the fitting sample's mean.
inline double real_normalized_error(const Predictor& p, const Dataset& fit, const Dataset& rest) {
  double err = (p.predict_batch(rest.X) - rest.Y).squaredNorm();
  double base = (rest.Y.array() - fit.Y.mean()).square().sum();
  return err / base;
}

}  // namespace locdim
