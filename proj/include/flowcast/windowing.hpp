#pragma once

#include <string>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/matrix.hpp"

namespace flowcast {

enum class WindowMode { block, slide };

inline const char* to_string(WindowMode m) {
  return m == WindowMode::block ? "block" : "slide";
}

inline WindowMode window_mode_from_string(const std::string& s) {
  if (s == "block") return WindowMode::block;
  if (s == "slide") return WindowMode::slide;
  throw ConfigError("unknown window mode '" + s + "' (expected 'block' or 'slide')");
}

struct WindowSpec {
  int n = 1;
  WindowMode mode = WindowMode::block;
};

// Which (time offset, source column) a feature position holds. Offsets are
// relative to the window's target row, so history is negative and 0 is the
// target row itself.
struct FeaturePosition {
  int time_offset = 0;
  std::size_t column = 0;
  bool operator==(const FeaturePosition&) const = default;
};

struct SupervisedSet {
  Matrix X;
  std::vector<double> y;
  int n = 1;
  WindowMode mode = WindowMode::block;
  std::vector<FeaturePosition> layout;  // one entry per column of X

  std::size_t rows() const { return X.rows(); }
  bool operator==(const SupervisedSet&) const = default;
};

// Turns a d x m series (target in the last column) into supervised rows by
// merging n consecutive source rows. Values are copied bit-exactly.
//
// block mode: disjoint consecutive windows, floor(d/n) of them; a supervised
// row is the n*m window values minus the final cell, which becomes the
// target. Rows past the last full window are dropped.
//
// slide mode: one supervised row per target row i >= n, holding rows
// i-n .. i-1 in full plus the target row's covariates.
inline SupervisedSet data_transform(const Matrix& series, WindowSpec spec) {
  const std::size_t d = series.rows();
  const std::size_t m = series.cols();
  if (m < 2) {
    throw DataError("data_transform: need at least 2 columns, got " + std::to_string(m));
  }
  if (spec.n < 1) throw DataError("data_transform: window size must be >= 1");
  const auto n = static_cast<std::size_t>(spec.n);
  if (2 * n > d) {
    throw DataError("data_transform: window of " + std::to_string(spec.n) +
                    " rows is too large for a series of " + std::to_string(d) + " rows");
  }

  SupervisedSet out;
  out.n = spec.n;
  out.mode = spec.mode;

  if (spec.mode == WindowMode::block) {
    const std::size_t rows = d / n;
    out.X = Matrix(rows, n * m - 1);
    out.y.resize(rows);
    for (std::size_t w = 0; w < rows; ++w) {
      std::size_t pos = 0;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
          const double v = series(w * n + r, c);
          if (r == n - 1 && c == m - 1) {
            out.y[w] = v;
          } else {
            out.X(w, pos++) = v;
          }
        }
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < m; ++c) {
        if (r == n - 1 && c == m - 1) continue;
        out.layout.push_back({static_cast<int>(r) - static_cast<int>(n - 1), c});
      }
    }
  } else {
    const std::size_t rows = d - n;
    out.X = Matrix(rows, n * m + m - 1);
    out.y.resize(rows);
    for (std::size_t w = 0; w < rows; ++w) {
      const std::size_t target_row = w + n;
      std::size_t pos = 0;
      for (std::size_t r = target_row - n; r < target_row; ++r) {
        for (std::size_t c = 0; c < m; ++c) out.X(w, pos++) = series(r, c);
      }
      for (std::size_t c = 0; c + 1 < m; ++c) out.X(w, pos++) = series(target_row, c);
      out.y[w] = series(target_row, m - 1);
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < m; ++c) {
        out.layout.push_back({static_cast<int>(r) - static_cast<int>(n), c});
      }
    }
    for (std::size_t c = 0; c + 1 < m; ++c) out.layout.push_back({0, c});
  }
  return out;
}

// Human-readable feature positions, e.g. "pressure[t-2]". Falls back to
// "c<index>" where no column name is known.
inline std::vector<std::string> describe_layout(
    const SupervisedSet& set, const std::vector<std::string>& column_names = {}) {
  std::vector<std::string> out;
  out.reserve(set.layout.size());
  for (const FeaturePosition& p : set.layout) {
    const std::string name = p.column < column_names.size()
                                 ? column_names[p.column]
                                 : "c" + std::to_string(p.column);
    out.push_back(name + "[t" + (p.time_offset == 0 ? "" : std::to_string(p.time_offset)) + "]");
  }
  return out;
}

}  // namespace flowcast
