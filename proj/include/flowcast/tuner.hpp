#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowcast/common.hpp"
#include "flowcast/dataset.hpp"
#include "flowcast/importance.hpp"
#include "flowcast/lstm.hpp"
#include "flowcast/model_io.hpp"
#include "flowcast/period.hpp"
#include "flowcast/windowing.hpp"

namespace flowcast {

// Bundles the per-stage settings for one pipeline run. The run seed is passed
// separately so the same configuration can be replayed under many seeds.
struct PipelineConfig {
  double train_fraction = 2.0 / 3.0;
  double importance_threshold = 0.95;
  WindowMode window_mode = WindowMode::block;
  ForestConfig forest;
  TrainConfig lstm;
  std::vector<std::string> timestamp_columns = {"time", "timestamp"};
};

namespace detail {

// Seed streams, so no two pipeline stages share a generator.
inline std::uint64_t importance_seed(std::uint64_t seed) { return mix_seed(seed, 1); }
inline std::uint64_t baseline_seed(std::uint64_t seed) { return mix_seed(seed, 2); }
inline std::uint64_t candidate_seed(std::uint64_t seed, int n) {
  return mix_seed(seed, 1000 + static_cast<std::uint64_t>(n));
}

}  // namespace detail

// Forest-importance selection over the covariate columns (everything except
// the target and configured timestamp columns).
struct FeatureSelection {
  ImportanceRanking ranking;  // over source column indices
  FeatureSet chosen;          // over source column indices
  std::vector<std::size_t> columns;  // selected source columns, importance order
  std::vector<std::string> names;    // matching column names
  std::size_t target_column = 0;
  std::string target_name;
};

inline FeatureSelection select_pipeline_features(const RawSeries& series,
                                                 const PipelineConfig& config,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t c = 0; c < series.cols(); ++c) {
    if (c == series.target_index) continue;
    bool excluded = false;
    for (const std::string& t : config.timestamp_columns) {
      if (series.column_names[c] == t) excluded = true;
    }
    if (!excluded) candidates.push_back(c);
  }
  if (candidates.empty()) throw DataError("feature selection: no covariate columns available");

  Matrix x(series.rows(), candidates.size());
  for (std::size_t r = 0; r < series.rows(); ++r) {
    for (std::size_t j = 0; j < candidates.size(); ++j) x(r, j) = series.values(r, candidates[j]);
  }
  const std::vector<double> y = series.target();

  ForestConfig fc = config.forest;
  fc.seed = detail::importance_seed(seed);
  const Forest forest = fit_forest(x, y, fc);
  ImportanceRanking local = rank_importances(forest);
  FeatureSet chosen_local = select_features(local, config.importance_threshold);

  FeatureSelection sel;
  sel.target_column = series.target_index;
  sel.target_name = series.column_names[series.target_index];
  for (auto& [col, w] : local.entries) sel.ranking.entries.emplace_back(candidates[col], w);
  sel.chosen.cumulative_weight = chosen_local.cumulative_weight;
  for (std::size_t col : chosen_local.selected) {
    sel.chosen.selected.push_back(candidates[col]);
    sel.columns.push_back(candidates[col]);
    sel.names.push_back(series.column_names[candidates[col]]);
  }
  return sel;
}

// Selected covariates (importance order) with the target as the last column,
// ready for data_transform.
inline Matrix build_reduced(const RawSeries& series, const FeatureSelection& sel) {
  Matrix reduced(series.rows(), sel.columns.size() + 1);
  for (std::size_t r = 0; r < series.rows(); ++r) {
    for (std::size_t j = 0; j < sel.columns.size(); ++j) {
      reduced(r, j) = series.values(r, sel.columns[j]);
    }
    reduced(r, sel.columns.size()) = series.values(r, sel.target_column);
  }
  return reduced;
}

// One transform -> split -> train pass at a fixed window size. The candidate
// seed is derived from (seed, n) so candidates are independent but replayable.
inline TrainedModel run_candidate(const Matrix& reduced, const FeatureSelection& sel, int n,
                                  const PipelineConfig& config, std::uint64_t seed) {
  const std::uint64_t cand_seed = detail::candidate_seed(seed, n);
  const SupervisedSet sup = data_transform(reduced, {n, config.window_mode});
  auto [train_rows, test_rows] = split_indices(sup.rows(), {config.train_fraction, cand_seed});
  const SupervisedSet train_part = take_rows(sup, train_rows);
  const SupervisedSet test_part = take_rows(sup, test_rows);

  TrainConfig tc = config.lstm;
  tc.seed = cand_seed;
  TrainedModel model = train(train_part, test_part, tc);
  model.feature_names = sel.names;
  model.target_name = sel.target_name;
  model.train_fraction = config.train_fraction;
  model.split_seed = cand_seed;
  return model;
}

struct TraceEntry {
  int n = 0;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  bool skipped = false;
  std::string reason;
};

struct TunedResult {
  TrainedModel best;
  int best_n = 0;
  double best_rmse = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceEntry> trace;  // ascending n, one entry per candidate
  PeriodSet periods;
};

// The candidate loop: evaluates each window size and keeps the strict-minimum
// RMSE model, so the first of equal candidates wins. Selection is pure
// comparison; no monotonicity in n is assumed.
template <typename CandidateRunner>
TunedResult tune_candidates(const std::vector<int>& candidates, CandidateRunner&& run) {
  TunedResult result;
  double best = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (int n : candidates) {
    auto [entry, model] = run(n);
    result.trace.push_back(entry);
    if (!entry.skipped && model.has_value() && entry.rmse < best) {
      best = entry.rmse;
      result.best = std::move(*model);
      result.best_n = n;
      have_best = true;
    }
  }
  if (!have_best) {
    throw DataError(
        "tuning found no viable window candidate; rerun with an explicit window size (--n)");
  }
  result.best_rmse = best;
  return result;
}

// Full tuning pipeline: select features once, detect the candidate periods of
// the target, then train one model per viable period and return the
// minimum-RMSE one. `selection` may be supplied to reuse an already-fitted
// feature selection (it must come from the same series, config and seed).
inline TunedResult optimized_lstm(const RawSeries& series, const PipelineConfig& config,
                                  std::uint64_t seed,
                                  const FeatureSelection* selection = nullptr) {
  const FeatureSelection sel =
      selection ? *selection : select_pipeline_features(series, config, seed);
  const Matrix reduced = build_reduced(series, sel);
  const std::vector<double> y = series.target();
  PeriodSet periods = cycle(y);
  if (periods.empty()) {
    throw DataError(
        "no periodicity detected in the target; rerun with an explicit window size (--n)");
  }

  auto runner = [&](int n) -> std::pair<TraceEntry, std::optional<TrainedModel>> {
    TraceEntry entry;
    entry.n = n;
    if (2 * static_cast<std::size_t>(n) >= series.rows()) {
      entry.skipped = true;
      entry.reason = "window of " + std::to_string(n) + " rows does not fit the series";
      return {entry, std::nullopt};
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      TrainedModel model = run_candidate(reduced, sel, n, config, seed);
      entry.rmse = model.test_rmse;
      entry.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      return {entry, std::move(model)};
    } catch (const DataError& e) {
      entry.skipped = true;
      entry.reason = e.what();
    } catch (const DivergenceError& e) {
      entry.skipped = true;
      entry.reason = e.what();
    }
    return {entry, std::nullopt};
  };

  TunedResult result = tune_candidates(periods.periods, runner);
  result.periods = std::move(periods);
  return result;
}

// Single fixed-n pass through the same pipeline, bypassing period detection.
inline TrainedModel manual_run(const RawSeries& series, int n, const PipelineConfig& config,
                               std::uint64_t seed, const FeatureSelection* selection = nullptr) {
  if (n < 1 || 2 * static_cast<std::size_t>(n) >= series.rows()) {
    throw DataError("window size n=" + std::to_string(n) +
                    " out of range (need 1 <= n < rows/2)");
  }
  const FeatureSelection sel =
      selection ? *selection : select_pipeline_features(series, config, seed);
  const Matrix reduced = build_reduced(series, sel);
  return run_candidate(reduced, sel, n, config, seed);
}

// Repeated manual runs varying one training parameter at a fixed window size.
struct GridResult {
  std::string parameter;  // "hidden_dim" | "seq_len" | "epochs"
  std::vector<std::pair<double, double>> entries;  // (value, test RMSE)
};

inline GridResult grid_run(const RawSeries& series, int n, const PipelineConfig& config,
                           std::uint64_t seed, const std::string& parameter,
                           const std::vector<int>& values) {
  if (values.empty()) throw ConfigError("grid run: no parameter values given");
  const FeatureSelection sel = select_pipeline_features(series, config, seed);
  GridResult grid;
  grid.parameter = parameter;
  for (int v : values) {
    PipelineConfig cfg = config;
    if (parameter == "hidden_dim") {
      cfg.lstm.hidden_dim = v;
    } else if (parameter == "seq_len") {
      cfg.lstm.seq_len = v;
    } else if (parameter == "epochs") {
      cfg.lstm.epochs = v;
    } else {
      throw ConfigError("grid run: unknown parameter '" + parameter + "'");
    }
    const TrainedModel model = manual_run(series, n, cfg, seed, &sel);
    grid.entries.emplace_back(static_cast<double>(v), model.test_rmse);
  }
  return grid;
}

inline constexpr const char* kTraceFormat = "flowcast-trace/1";
inline constexpr const char* kGridFormat = "flowcast-grid/1";

// Wall times are deliberately left out so identical seeds produce
// byte-identical trace files.
inline nlohmann::json trace_to_json(const TunedResult& result, std::uint64_t seed) {
  nlohmann::json j;
  j["format"] = kTraceFormat;
  j["seed"] = seed;
  j["periods"] = result.periods.periods;
  j["run_lengths"] = result.periods.run_lengths;
  nlohmann::json candidates = nlohmann::json::array();
  for (const TraceEntry& e : result.trace) {
    nlohmann::json c = {{"n", e.n}, {"skipped", e.skipped}};
    if (e.skipped) {
      c["reason"] = e.reason;
    } else {
      c["rmse"] = e.rmse;
    }
    candidates.push_back(c);
  }
  j["candidates"] = candidates;
  j["best_n"] = result.best_n;
  j["best_rmse"] = result.best_rmse;
  j["features"] = result.best.feature_names;
  return j;
}

inline nlohmann::json grid_to_json(const GridResult& grid, int n, std::uint64_t seed) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [value, rmse] : grid.entries) entries.push_back({{"value", value}, {"rmse", rmse}});
  return {{"format", kGridFormat},
          {"parameter", grid.parameter},
          {"n", n},
          {"seed", seed},
          {"entries", entries}};
}

}  // namespace flowcast
