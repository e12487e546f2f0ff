#pragma once

// Test-only reference implementations, kept deliberately independent of the
// library code paths they check.

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include <flowcast/importance.hpp>
#include <flowcast/lstm.hpp>
#include <flowcast/matrix.hpp>
#include <flowcast/rng.hpp>
#include <flowcast/windowing.hpp>

namespace oracles {

// Plain index-arithmetic windowing: builds each window as one flat vector and
// peels the target off the end.
inline std::pair<flowcast::Matrix, std::vector<double>> naive_block_transform(
    const flowcast::Matrix& series, std::size_t n) {
  const std::size_t d = series.rows(), m = series.cols();
  const std::size_t windows = d / n;
  flowcast::Matrix x(windows, n * m - 1);
  std::vector<double> y(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    std::vector<double> flat;
    for (std::size_t k = 0; k < n * m; ++k) flat.push_back(series(w * n + k / m, k % m));
    y[w] = flat.back();
    flat.pop_back();
    for (std::size_t k = 0; k < flat.size(); ++k) x(w, k) = flat[k];
  }
  return {x, y};
}

inline std::pair<flowcast::Matrix, std::vector<double>> naive_slide_transform(
    const flowcast::Matrix& series, std::size_t n) {
  const std::size_t d = series.rows(), m = series.cols();
  const std::size_t windows = d - n;
  flowcast::Matrix x(windows, n * m + m - 1);
  std::vector<double> y(windows);
  for (std::size_t i = n; i < d; ++i) {
    std::vector<double> flat;
    for (std::size_t r = i - n; r <= i; ++r) {
      for (std::size_t c = 0; c < m; ++c) flat.push_back(series(r, c));
    }
    y[i - n] = flat.back();
    flat.pop_back();
    for (std::size_t k = 0; k < flat.size(); ++k) x(i - n, k) = flat[k];
  }
  return {x, y};
}

// Independent period scan: rescale, center, then extract maximal positive
// segments that are terminated by a non-positive sample; return the 5
// smallest distinct lengths.
inline std::vector<int> brute_force_periods(std::span<const double> y) {
  const double lo = *std::min_element(y.begin(), y.end());
  const double hi = *std::max_element(y.begin(), y.end());
  std::vector<double> centered(y.size(), 0.0);
  if (hi > lo) {
    double mean = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      centered[i] = (y[i] - lo) / (hi - lo);
      mean += centered[i];
    }
    mean /= static_cast<double>(y.size());
    for (double& v : centered) v -= mean;
  }
  std::vector<int> lengths;
  std::size_t start = 0;
  while (start < centered.size()) {
    if (centered[start] <= 0.0) {
      ++start;
      continue;
    }
    std::size_t end = start;
    while (end < centered.size() && centered[end] > 0.0) ++end;
    if (end < centered.size()) lengths.push_back(static_cast<int>(end - start));
    start = end;
  }
  std::set<int> distinct(lengths.begin(), lengths.end());
  std::vector<int> smallest;
  for (int v : distinct) {
    if (smallest.size() == 5) break;
    smallest.push_back(v);
  }
  return smallest;
}

// All completed positive-run lengths of the centered series (multiset).
inline std::vector<int> brute_force_runs(std::span<const double> y) {
  const double lo = *std::min_element(y.begin(), y.end());
  const double hi = *std::max_element(y.begin(), y.end());
  std::vector<double> centered(y.size(), 0.0);
  if (hi > lo) {
    double mean = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      centered[i] = (y[i] - lo) / (hi - lo);
      mean += centered[i];
    }
    mean /= static_cast<double>(y.size());
    for (double& v : centered) v -= mean;
  }
  std::vector<int> lengths;
  std::size_t start = 0;
  while (start < centered.size()) {
    if (centered[start] <= 0.0) {
      ++start;
      continue;
    }
    std::size_t end = start;
    while (end < centered.size() && centered[end] > 0.0) ++end;
    if (end < centered.size()) lengths.push_back(static_cast<int>(end - start));
    start = end;
  }
  return lengths;
}

inline double naive_rmse(std::span<const double> pred, std::span<const double> truth) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

// Central finite differences of the sequence MSE loss with respect to every
// parameter; the oracle for backward().
inline double sequence_loss(const flowcast::LstmModel& model, const flowcast::Matrix& window,
                            std::span<const double> targets) {
  const auto run =
      flowcast::forward_sequence(model, window, flowcast::CellState::zeros(model.hidden_dim));
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    loss += (run.predictions[t] - targets[t]) * (run.predictions[t] - targets[t]);
  }
  return loss / static_cast<double>(targets.size());
}

inline flowcast::LstmGradients finite_diff_gradients(const flowcast::LstmModel& model,
                                                     const flowcast::Matrix& window,
                                                     std::span<const double> targets,
                                                     double h = 1e-5) {
  flowcast::LstmGradients grads = flowcast::LstmGradients::zeros_like(model);
  flowcast::LstmModel probe = model;
  auto central = [&](double& param, double& grad) {
    const double saved = param;
    param = saved + h;
    const double up = sequence_loss(probe, window, targets);
    param = saved - h;
    const double down = sequence_loss(probe, window, targets);
    param = saved;
    grad = (up - down) / (2.0 * h);
  };
  auto matrices = [&](flowcast::Matrix& p, flowcast::Matrix& g) {
    for (std::size_t i = 0; i < p.size(); ++i) central(p.data()[i], g.data()[i]);
  };
  auto vectors = [&](std::vector<double>& p, std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) central(p[i], g[i]);
  };
  matrices(probe.w_forget, grads.w_forget);
  matrices(probe.w_input, grads.w_input);
  matrices(probe.w_cell, grads.w_cell);
  matrices(probe.w_output, grads.w_output);
  vectors(probe.b_forget, grads.b_forget);
  vectors(probe.b_input, grads.b_input);
  vectors(probe.b_cell, grads.b_cell);
  vectors(probe.b_output, grads.b_output);
  vectors(probe.w_readout, grads.w_readout);
  central(probe.b_readout, grads.b_readout);
  return grads;
}

// Permutation importance: RMSE increase when one column is shuffled.
inline std::vector<double> permutation_importance(const flowcast::Forest& forest,
                                                  const flowcast::Matrix& x,
                                                  std::span<const double> y,
                                                  std::uint64_t seed) {
  const std::vector<double> base_pred = flowcast::forest_predict(forest, x);
  const double base = naive_rmse(base_pred, y);
  std::vector<double> importance(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    std::vector<double> column(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) column[r] = x(r, c);
    flowcast::Rng rng(flowcast::mix_seed(seed, c));
    rng.shuffle(column);
    flowcast::Matrix shuffled = x;
    for (std::size_t r = 0; r < x.rows(); ++r) shuffled(r, c) = column[r];
    const std::vector<double> pred = flowcast::forest_predict(forest, shuffled);
    importance[c] = naive_rmse(pred, y) - base;
  }
  return importance;
}

}  // namespace oracles
