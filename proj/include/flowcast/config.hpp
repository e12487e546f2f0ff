#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "flowcast/common.hpp"
#include "flowcast/model_io.hpp"
#include "flowcast/tuner.hpp"
#include "flowcast/windowing.hpp"

namespace flowcast {

// One document for every stage's settings. Command-line flags override file
// values; unknown keys are rejected.
struct RunConfig {
  // dataset
  std::string target_column;  // empty = last column
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;
  std::vector<std::string> timestamp_columns = {"time", "timestamp"};
  // forest
  ForestConfig forest;
  // importance
  double importance_threshold = 0.95;
  // window
  WindowMode window_mode = WindowMode::block;
  int window_n = 0;  // 0 = unset; the tuner supplies n
  // lstm
  TrainConfig lstm;

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.train_fraction = train_fraction;
    p.importance_threshold = importance_threshold;
    p.window_mode = window_mode;
    p.forest = forest;
    p.lstm = lstm;
    p.timestamp_columns = timestamp_columns;
    return p;
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) known = true;
    }
    if (!known) {
      throw ConfigError("unknown config key '" + (scope.empty() ? key : scope + "." + key) + "'");
    }
  }
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + scope + "." + key + "' has the wrong type");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  detail::check_keys(j, {"dataset", "forest", "importance", "window", "lstm"}, "");
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    detail::check_keys(d, {"target_column", "train_fraction", "seed", "timestamp_columns"},
                       "dataset");
    detail::read_key(d, "target_column", cfg.target_column, "dataset");
    detail::read_key(d, "train_fraction", cfg.train_fraction, "dataset");
    detail::read_key(d, "seed", cfg.seed, "dataset");
    detail::read_key(d, "timestamp_columns", cfg.timestamp_columns, "dataset");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
      throw ConfigError("dataset.train_fraction must be in (0, 1)");
    }
  }
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    detail::check_keys(
        f, {"n_trees", "max_depth", "min_samples_leaf", "features_per_split", "bootstrap"},
        "forest");
    detail::read_key(f, "n_trees", cfg.forest.n_trees, "forest");
    detail::read_key(f, "max_depth", cfg.forest.max_depth, "forest");
    detail::read_key(f, "min_samples_leaf", cfg.forest.min_samples_leaf, "forest");
    detail::read_key(f, "features_per_split", cfg.forest.features_per_split, "forest");
    detail::read_key(f, "bootstrap", cfg.forest.bootstrap, "forest");
  }
  if (j.contains("importance")) {
    detail::check_keys(j.at("importance"), {"threshold"}, "importance");
    detail::read_key(j.at("importance"), "threshold", cfg.importance_threshold, "importance");
  }
  if (j.contains("window")) {
    const auto& w = j.at("window");
    detail::check_keys(w, {"mode", "n"}, "window");
    std::string mode;
    detail::read_key(w, "mode", mode, "window");
    if (!mode.empty()) cfg.window_mode = window_mode_from_string(mode);
    detail::read_key(w, "n", cfg.window_n, "window");
  }
  if (j.contains("lstm")) {
    const auto& l = j.at("lstm");
    detail::check_keys(
        l, {"seq_len", "hidden_dim", "epochs", "learning_rate", "clip_norm", "shuffle"}, "lstm");
    detail::read_key(l, "seq_len", cfg.lstm.seq_len, "lstm");
    detail::read_key(l, "hidden_dim", cfg.lstm.hidden_dim, "lstm");
    detail::read_key(l, "epochs", cfg.lstm.epochs, "lstm");
    detail::read_key(l, "learning_rate", cfg.lstm.learning_rate, "lstm");
    detail::read_key(l, "clip_norm", cfg.lstm.clip_norm, "lstm");
    detail::read_key(l, "shuffle", cfg.lstm.shuffle, "lstm");
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  try {
    return parse_run_config(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": malformed config: " + e.what());
  }
}

}  // namespace flowcast
