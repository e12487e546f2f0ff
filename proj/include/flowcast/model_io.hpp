#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowcast/common.hpp"
#include "flowcast/lstm.hpp"

namespace flowcast {

inline constexpr const char* kModelFormat = "flowcast-model/1";

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j.at(r).get<std::vector<double>>();
    if (row.size() != cols) throw DataError("model file: ragged matrix");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

inline nlohmann::json layout_to_json(const std::vector<FeaturePosition>& layout) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : layout) out.push_back({{"offset", p.time_offset}, {"column", p.column}});
  return out;
}

inline std::vector<FeaturePosition> layout_from_json(const nlohmann::json& j) {
  std::vector<FeaturePosition> layout;
  for (const auto& e : j) {
    layout.push_back({e.at("offset").get<int>(), e.at("column").get<std::size_t>()});
  }
  return layout;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["input_dim"] = model.net.input_dim;
  j["hidden_dim"] = model.net.hidden_dim;
  j["weights"] = {{"forget", detail::matrix_to_json(model.net.w_forget)},
                  {"input", detail::matrix_to_json(model.net.w_input)},
                  {"cell", detail::matrix_to_json(model.net.w_cell)},
                  {"output", detail::matrix_to_json(model.net.w_output)},
                  {"readout", model.net.w_readout}};
  j["biases"] = {{"forget", model.net.b_forget},
                 {"input", model.net.b_input},
                 {"cell", model.net.b_cell},
                 {"output", model.net.b_output},
                 {"readout", model.net.b_readout}};
  j["feature_scaler"] = {{"min", model.feature_scaler.mins()},
                         {"max", model.feature_scaler.maxs()}};
  j["target_scaler"] = {{"min", model.target_scaler.mins()},
                        {"max", model.target_scaler.maxs()}};
  j["window"] = {{"n", model.window_n},
                 {"mode", to_string(model.window_mode)},
                 {"layout", detail::layout_to_json(model.layout)}};
  j["config"] = {{"seq_len", model.config.seq_len},
                 {"hidden_dim", model.config.hidden_dim},
                 {"epochs", model.config.epochs},
                 {"learning_rate", model.config.learning_rate},
                 {"clip_norm", model.config.clip_norm},
                 {"shuffle", model.config.shuffle},
                 {"seed", model.config.seed}};
  j["pipeline"] = {{"features", model.feature_names},
                   {"target", model.target_name},
                   {"train_fraction", model.train_fraction},
                   {"split_seed", model.split_seed}};
  j["metrics"] = {{"test_rmse", model.test_rmse},
                  {"train_curve", model.train_curve},
                  {"test_curve", model.test_curve}};
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != kModelFormat) {
    throw DataError("unsupported model format (expected " + std::string(kModelFormat) + ")");
  }
  TrainedModel model;
  model.net.input_dim = j.at("input_dim").get<std::size_t>();
  model.net.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  const auto& w = j.at("weights");
  model.net.w_forget = detail::matrix_from_json(w.at("forget"));
  model.net.w_input = detail::matrix_from_json(w.at("input"));
  model.net.w_cell = detail::matrix_from_json(w.at("cell"));
  model.net.w_output = detail::matrix_from_json(w.at("output"));
  model.net.w_readout = w.at("readout").get<std::vector<double>>();
  const auto& b = j.at("biases");
  model.net.b_forget = b.at("forget").get<std::vector<double>>();
  model.net.b_input = b.at("input").get<std::vector<double>>();
  model.net.b_cell = b.at("cell").get<std::vector<double>>();
  model.net.b_output = b.at("output").get<std::vector<double>>();
  model.net.b_readout = b.at("readout").get<double>();
  model.feature_scaler =
      Normalizer::from_bounds(j.at("feature_scaler").at("min").get<std::vector<double>>(),
                              j.at("feature_scaler").at("max").get<std::vector<double>>());
  model.target_scaler =
      Normalizer::from_bounds(j.at("target_scaler").at("min").get<std::vector<double>>(),
                              j.at("target_scaler").at("max").get<std::vector<double>>());
  model.window_n = j.at("window").at("n").get<int>();
  model.window_mode = window_mode_from_string(j.at("window").at("mode").get<std::string>());
  model.layout = detail::layout_from_json(j.at("window").at("layout"));
  const auto& c = j.at("config");
  model.config.seq_len = c.at("seq_len").get<int>();
  model.config.hidden_dim = c.at("hidden_dim").get<int>();
  model.config.epochs = c.at("epochs").get<int>();
  model.config.learning_rate = c.at("learning_rate").get<double>();
  model.config.clip_norm = c.at("clip_norm").get<double>();
  model.config.shuffle = c.at("shuffle").get<bool>();
  model.config.seed = c.at("seed").get<std::uint64_t>();
  const auto& p = j.at("pipeline");
  model.feature_names = p.at("features").get<std::vector<std::string>>();
  model.target_name = p.at("target").get<std::string>();
  model.train_fraction = p.at("train_fraction").get<double>();
  model.split_seed = p.at("split_seed").get<std::uint64_t>();
  const auto& metrics = j.at("metrics");
  model.test_rmse = metrics.at("test_rmse").is_null()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : metrics.at("test_rmse").get<double>();
  model.train_curve = metrics.at("train_curve").get<std::vector<double>>();
  model.test_curve = metrics.at("test_curve").get<std::vector<double>>();
  return model;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

inline void save_model(const TrainedModel& model, const std::string& path) {
  write_json_file(model_to_json(model), path);
}

inline TrainedModel load_model(const std::string& path) {
  try {
    return model_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  }
}

}  // namespace flowcast
