#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/matrix.hpp"
#include "flowcast/rng.hpp"
#include "flowcast/windowing.hpp"

namespace flowcast {

// Multivariate series, oldest row first; one column is the prediction target
// (by default the last).
struct RawSeries {
  Matrix values;
  std::vector<std::string> column_names;
  std::size_t target_index = 0;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }

  std::vector<double> target() const {
    std::vector<double> y(rows());
    for (std::size_t r = 0; r < y.size(); ++r) y[r] = values(r, target_index);
    return y;
  }
};

// `key` is a column name or a decimal index; empty selects the last column.
inline std::size_t resolve_column(const std::vector<std::string>& names, const std::string& key) {
  if (key.empty()) return names.size() - 1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == key) return i;
  }
  std::size_t idx = 0;
  auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
  if (ec == std::errc() && p == key.data() + key.size() && idx < names.size()) return idx;
  throw DataError("unknown column '" + key + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace detail

// Reads a comma-separated file with a header row; every data cell must parse
// as a finite real. Errors name the offending data row (1-based) and column.
inline RawSeries load_csv(const std::string& path, const std::string& target_column = "") {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  RawSeries series;
  series.column_names = detail::split_csv_line(line);
  const std::size_t m = series.column_names.size();
  if (m < 2) throw DataError(path + ": need at least 2 columns, found " + std::to_string(m));

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    ++rows;
    if (cells.size() != m) {
      throw DataError(path + ": row " + std::to_string(rows) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(m));
    }
    for (std::size_t c = 0; c < m; ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v)) {
        throw DataError(path + ": non-numeric cell '" + cell + "' at row " +
                        std::to_string(rows) + ", column '" + series.column_names[c] + "'");
      }
      values.push_back(v);
    }
  }
  if (rows < 2) throw DataError(path + ": need at least 2 data rows, found " + std::to_string(rows));

  series.values = Matrix(rows, m);
  std::copy(values.begin(), values.end(), series.values.data());
  series.target_index = resolve_column(series.column_names, target_column);
  return series;
}

// %.17g keeps doubles round-trip exact.
inline void write_csv(const std::string& path, const Matrix& values,
                      const std::vector<std::string>& column_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t c = 0; c < column_names.size(); ++c) {
    out << (c ? "," : "") << column_names[c];
  }
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

// Per-column min-max scaler into [0, 1]. Constant columns map to 0.5 and
// invert back to the constant.
class Normalizer {
 public:
  Normalizer() = default;

  static Normalizer fit(const Matrix& m) {
    Normalizer n;
    n.mins_.assign(m.cols(), 0.0);
    n.maxs_.assign(m.cols(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double lo = m(0, c), hi = m(0, c);
      for (std::size_t r = 1; r < m.rows(); ++r) {
        lo = std::min(lo, m(r, c));
        hi = std::max(hi, m(r, c));
      }
      n.mins_[c] = lo;
      n.maxs_[c] = hi;
    }
    return n;
  }

  static Normalizer fit(std::span<const double> column) {
    Normalizer n;
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    n.mins_ = {*lo};
    n.maxs_ = {*hi};
    return n;
  }

  std::size_t columns() const { return mins_.size(); }

  double apply_at(std::size_t col, double v) const {
    const double lo = mins_[col], hi = maxs_[col];
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  }
  double invert_at(std::size_t col, double v) const {
    const double lo = mins_[col], hi = maxs_[col];
    return hi > lo ? lo + v * (hi - lo) : lo;
  }

  Matrix apply(const Matrix& m) const {
    if (m.cols() != columns()) throw DataError("normalizer: column count mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = apply_at(c, m(r, c));
    }
    return out;
  }

  std::vector<double> apply(std::span<const double> column) const {
    if (columns() != 1) throw DataError("normalizer: expected a single fitted column");
    std::vector<double> out(column.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply_at(0, column[i]);
    return out;
  }

  std::vector<double> invert(std::span<const double> column) const {
    if (columns() != 1) throw DataError("normalizer: expected a single fitted column");
    std::vector<double> out(column.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = invert_at(0, column[i]);
    return out;
  }

  const std::vector<double>& mins() const { return mins_; }
  const std::vector<double>& maxs() const { return maxs_; }

  static Normalizer from_bounds(std::vector<double> mins, std::vector<double> maxs) {
    Normalizer n;
    n.mins_ = std::move(mins);
    n.maxs_ = std::move(maxs);
    return n;
  }

  bool operator==(const Normalizer&) const = default;

 private:
  std::vector<double> mins_, maxs_;
};

inline Normalizer fit_normalizer(const RawSeries& series, std::span<const std::size_t> columns) {
  if (columns.empty()) throw DataError("fit_normalizer: no columns given");
  Matrix sub(series.rows(), columns.size());
  for (std::size_t r = 0; r < series.rows(); ++r) {
    for (std::size_t j = 0; j < columns.size(); ++j) sub(r, j) = series.values(r, columns[j]);
  }
  return Normalizer::fit(sub);
}

struct SplitSpec {
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;
};

// Random partition of [0, rows); both halves are returned in ascending order
// so downstream consumers keep chronological order within each part.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t rows, const SplitSpec& spec) {
  if (rows < 3) throw DataError("holdout split: need at least 3 rows, got " + std::to_string(rows));
  const long train = std::lround(spec.train_fraction * static_cast<double>(rows));
  if (train < 1 || train >= static_cast<long>(rows)) {
    throw DataError("holdout split: fraction leaves an empty part");
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(order);
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + train);
  std::vector<std::size_t> test_idx(order.begin() + train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {std::move(train_idx), std::move(test_idx)};
}

inline SupervisedSet take_rows(const SupervisedSet& set, std::span<const std::size_t> indices) {
  SupervisedSet out;
  out.n = set.n;
  out.mode = set.mode;
  out.layout = set.layout;
  out.X = Matrix(indices.size(), set.X.cols());
  out.y.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = set.X.row(indices[i]);
    std::copy(src.begin(), src.end(), out.X.row(i).begin());
    out.y[i] = set.y[indices[i]];
  }
  return out;
}

inline std::pair<SupervisedSet, SupervisedSet> holdout_split(const SupervisedSet& set,
                                                             const SplitSpec& spec) {
  const auto [train_idx, test_idx] = split_indices(set.rows(), spec);
  return {take_rows(set, train_idx), take_rows(set, test_idx)};
}

}  // namespace flowcast
