// flowcast command-line interface. Every command is a pure function of its
// input files, config and seed; all randomness is controlled by --seed.

#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <flowcast/flowcast.hpp>

namespace {

using namespace flowcast;

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated integer list, got '" + csv + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Shared --input/--config/--seed handling. Flags win over config values.
struct CommonOpts {
  std::string input;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> target;
  std::optional<int> n;
  std::optional<std::string> mode;

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (target) cfg.target_column = *target;
    if (n) cfg.window_n = *n;
    if (mode) cfg.window_mode = window_mode_from_string(*mode);
    return cfg;
  }

  RawSeries load(const RunConfig& cfg) const { return load_csv(input, cfg.target_column); }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_window = true) {
  cmd->add_option("--input", opts.input, "input CSV (header row, target column)")->required();
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--seed", opts.seed, "seed controlling all randomness");
  cmd->add_option("--target", opts.target, "target column name or index (default: last)");
  if (with_window) {
    cmd->add_option("--n", opts.n, "window size");
    cmd->add_option("--mode", opts.mode, "window mode: block | slide");
  }
}

Matrix reduced_from_model(const RawSeries& series, const TrainedModel& model) {
  Matrix reduced(series.rows(), model.feature_names.size() + 1);
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    const std::size_t col = resolve_column(series.column_names, model.feature_names[j]);
    for (std::size_t r = 0; r < series.rows(); ++r) reduced(r, j) = series.values(r, col);
  }
  const std::size_t target = resolve_column(series.column_names, model.target_name);
  for (std::size_t r = 0; r < series.rows(); ++r) {
    reduced(r, model.feature_names.size()) = series.values(r, target);
  }
  return reduced;
}

std::vector<TraceEntry> trace_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != kTraceFormat) {
    throw DataError("expected a " + std::string(kTraceFormat) + " file");
  }
  std::vector<TraceEntry> trace;
  for (const auto& c : j.at("candidates")) {
    TraceEntry e;
    e.n = c.at("n").get<int>();
    e.skipped = c.at("skipped").get<bool>();
    if (c.contains("rmse")) e.rmse = c.at("rmse").get<double>();
    if (c.contains("reason")) e.reason = c.at("reason").get<std::string>();
    trace.push_back(e);
  }
  return trace;
}

GridResult grid_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != kGridFormat) {
    throw DataError("expected a " + std::string(kGridFormat) + " file");
  }
  GridResult grid;
  grid.parameter = j.at("parameter").get<std::string>();
  for (const auto& e : j.at("entries")) {
    grid.entries.emplace_back(e.at("value").get<double>(), e.at("rmse").get<double>());
  }
  return grid;
}

// ---- subcommands -----------------------------------------------------------

struct SynthOpts {
  std::string out, truth_out;
  SynthSpec spec;
  double phase = std::numeric_limits<double>::quiet_NaN();
  double amplitude = 1.0;
  int period = 20;
  double channel_noise = 0.0;
};

void run_synth(const SynthOpts& o) {
  SynthSpec spec = o.spec;
  spec.channels = {{o.amplitude, o.period, o.phase, o.channel_noise}};
  auto [series, truth] = gen_periodic(spec);
  write_csv(o.out, series.values, series.column_names);
  if (!o.truth_out.empty()) write_json_file(ground_truth_to_json(truth, spec), o.truth_out);
  std::cout << "wrote " << series.rows() << " rows x " << series.cols() << " columns to "
            << o.out << "\n";
}

void run_analyze_period(const CommonOpts& common, const std::string& out_path) {
  const RunConfig cfg = common.resolve();
  const RawSeries series = common.load(cfg);
  const PeriodSet periods = cycle(series.target());

  std::map<int, int> counts;
  for (int r : periods.run_lengths) counts[r]++;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& [length, count] : counts) {
    runs.push_back({{"length", length}, {"count", count}});
  }
  const nlohmann::json j = {{"periods", periods.periods}, {"run_lengths", runs}};
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(j, out_path);
    std::cout << "wrote " << out_path << "\n";
  }
}

void run_transform(const CommonOpts& common, const std::string& out_path) {
  const RunConfig cfg = common.resolve();
  if (cfg.window_n < 1) throw ConfigError("transform: --n (or window.n) is required");
  const RawSeries series = common.load(cfg);
  const SupervisedSet sup =
      data_transform(series.values, {cfg.window_n, cfg.window_mode});

  std::vector<std::string> header = describe_layout(sup, series.column_names);
  header.push_back(series.column_names[series.target_index]);
  Matrix out(sup.rows(), sup.X.cols() + 1);
  for (std::size_t r = 0; r < sup.rows(); ++r) {
    const auto src = sup.X.row(r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
    out(r, sup.X.cols()) = sup.y[r];
  }
  write_csv(out_path, out, header);
  std::cout << "wrote " << sup.rows() << " supervised rows to " << out_path << "\n";
}

struct TrainOpts {
  CommonOpts common;
  std::string out_model, out_trace;
  std::string grid_hidden, grid_seq, grid_epochs;
};

void run_train(const TrainOpts& o) {
  const RunConfig cfg = o.common.resolve();
  const RawSeries series = o.common.load(cfg);
  if (cfg.window_n < 1) throw ConfigError("train: --n (or window.n) is required");

  const int grids = !o.grid_hidden.empty() + !o.grid_seq.empty() + !o.grid_epochs.empty();
  if (grids > 1) throw ConfigError("train: give at most one --grid-* option");
  if (grids == 1) {
    if (o.out_trace.empty()) throw ConfigError("train: grid runs need --out-trace");
    std::string param = "hidden_dim";
    std::vector<int> values;
    if (!o.grid_hidden.empty()) {
      values = parse_int_list(o.grid_hidden);
    } else if (!o.grid_seq.empty()) {
      param = "seq_len";
      values = parse_int_list(o.grid_seq);
    } else {
      param = "epochs";
      values = parse_int_list(o.grid_epochs);
    }
    const GridResult grid = grid_run(series, cfg.window_n, cfg.pipeline(), cfg.seed, param, values);
    write_json_file(grid_to_json(grid, cfg.window_n, cfg.seed), o.out_trace);
    for (const auto& [value, r] : grid.entries) {
      std::cout << param << "=" << value << " rmse=" << r << "\n";
    }
    std::cout << "wrote " << o.out_trace << "\n";
    return;
  }

  if (o.out_model.empty()) throw ConfigError("train: --out-model is required");
  const TrainedModel model = manual_run(series, cfg.window_n, cfg.pipeline(), cfg.seed);
  save_model(model, o.out_model);
  std::cout << "n=" << cfg.window_n << " test rmse=" << model.test_rmse << "\n"
            << "wrote " << o.out_model << "\n";
}

void run_tune(const CommonOpts& common, const std::string& out_model,
              const std::string& out_trace) {
  const RunConfig cfg = common.resolve();
  const RawSeries series = common.load(cfg);
  const TunedResult result = optimized_lstm(series, cfg.pipeline(), cfg.seed);
  for (const TraceEntry& e : result.trace) {
    if (e.skipped) {
      std::cout << "candidate n=" << e.n << " skipped: " << e.reason << "\n";
    } else {
      std::cout << "candidate n=" << e.n << " rmse=" << e.rmse << "\n";
    }
  }
  std::cout << "best n=" << result.best_n << " rmse=" << result.best_rmse << "\n";
  if (!out_model.empty()) {
    save_model(result.best, out_model);
    std::cout << "wrote " << out_model << "\n";
  }
  if (!out_trace.empty()) {
    write_json_file(trace_to_json(result, cfg.seed), out_trace);
    std::cout << "wrote " << out_trace << "\n";
  }
}

void run_predict(const std::string& model_path, const std::string& input,
                 const std::string& out_path, const std::string& rows) {
  const TrainedModel model = load_model(model_path);
  const RawSeries series = load_csv(input, model.target_name);
  const Matrix reduced = reduced_from_model(series, model);
  const SupervisedSet sup = data_transform(reduced, {model.window_n, model.window_mode});

  std::vector<std::size_t> indices(sup.rows());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (rows == "test") {
    indices = split_indices(sup.rows(), {model.train_fraction, model.split_seed}).second;
  } else if (rows != "all") {
    throw ConfigError("predict: --rows must be 'all' or 'test'");
  }
  const SupervisedSet part = take_rows(sup, indices);
  const std::vector<double> preds = predict(model, part);
  emit_pred_vs_actual(indices, part.y, preds, out_path);
  std::cout << "wrote " << preds.size() << " predictions to " << out_path << "\n";
}

void run_compare(const CommonOpts& common, const std::string& methods_csv,
                 const std::string& out_path) {
  const RunConfig cfg = common.resolve();
  const RawSeries series = common.load(cfg);
  std::vector<std::string> methods = parse_string_list(methods_csv);
  if (methods.empty()) methods = kMethodNames;
  const ComparisonReport report = compare(series, methods, cfg.pipeline(), cfg.seed);
  for (const MethodResult& r : report.methods) {
    std::cout << r.name << " rmse=" << r.rmse << "\n";
  }
  if (std::isfinite(report.improvement_pct)) {
    std::cout << "improvement over plain lstm: " << report.improvement_pct << "%\n";
  }
  if (!out_path.empty()) {
    write_json_file(report_to_json(report), out_path);
    std::cout << "wrote " << out_path << "\n";
  }
}

struct PlotOpts {
  std::string kind, model, trace, report, input, out;
};

void run_emit_plots(const PlotOpts& o) {
  auto need = [&](const std::string& value, const std::string& flag) {
    if (value.empty()) {
      throw ConfigError("emit-plots --kind " + o.kind + " needs " + flag);
    }
  };
  if (o.kind == "loss-curves") {
    need(o.model, "--model");
    emit_loss_curves(load_model(o.model), o.out);
  } else if (o.kind == "rmse-vs-n") {
    need(o.trace, "--trace");
    emit_rmse_vs_n(trace_from_json(read_json_file(o.trace)), o.out);
  } else if (o.kind == "pred-vs-actual") {
    need(o.model, "--model");
    need(o.input, "--input");
    const TrainedModel model = load_model(o.model);
    const RawSeries series = load_csv(o.input, model.target_name);
    const Matrix reduced = reduced_from_model(series, model);
    const SupervisedSet sup = data_transform(reduced, {model.window_n, model.window_mode});
    const auto idx = split_indices(sup.rows(), {model.train_fraction, model.split_seed}).second;
    const SupervisedSet part = take_rows(sup, idx);
    emit_pred_vs_actual(idx, part.y, predict(model, part), o.out);
  } else if (o.kind == "method-comparison") {
    need(o.report, "--report");
    const nlohmann::json j = read_json_file(o.report);
    ComparisonReport report;
    for (const auto& m : j.at("methods")) {
      report.methods.push_back({m.at("name").get<std::string>(), m.at("rmse").get<double>(),
                                m.at("r2").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                     : m.at("r2").get<double>(),
                                m.at("wall_ms").get<double>()});
    }
    emit_method_comparison(report, o.out);
  } else if (o.kind == "rmse-vs-hidden" || o.kind == "rmse-vs-iterations") {
    need(o.trace, "--trace");
    const GridResult grid = grid_from_json(read_json_file(o.trace));
    const std::string expected = o.kind == "rmse-vs-hidden" ? "hidden_dim" : "epochs";
    if (grid.parameter != expected) {
      throw DataError("emit-plots: grid file varies '" + grid.parameter + "', kind " + o.kind +
                      " needs '" + expected + "'");
    }
    emit_grid(grid, o.kind == "rmse-vs-hidden" ? "hidden" : "epochs", o.out);
  } else {
    throw ConfigError(
        "unknown plot kind '" + o.kind +
        "' (expected rmse-vs-hidden, rmse-vs-iterations, pred-vs-actual, rmse-vs-n, "
        "loss-curves or method-comparison)");
  }
  std::cout << "wrote " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowcast: period-aware multivariate LSTM forecasting"};
  app.require_subcommand(1);

  SynthOpts synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic periodic series");
  synth_cmd->add_option("--out", synth_opts.out, "output CSV path")->required();
  synth_cmd->add_option("--truth-out", synth_opts.truth_out, "ground-truth JSON sidecar");
  synth_cmd->add_option("--rows", synth_opts.spec.rows, "number of rows");
  synth_cmd->add_option("--period", synth_opts.period, "informative channel period (samples)");
  synth_cmd->add_option("--amplitude", synth_opts.amplitude, "informative channel amplitude");
  synth_cmd->add_option("--phase", synth_opts.phase, "channel phase (default pi/period)");
  synth_cmd->add_option("--channel-noise", synth_opts.channel_noise, "channel noise sigma");
  synth_cmd->add_option("--distractors", synth_opts.spec.distractors, "pure-noise columns");
  synth_cmd->add_option("--distractor-noise", synth_opts.spec.distractor_sigma,
                        "distractor noise sigma");
  synth_cmd->add_option("--lag", synth_opts.spec.target_lag, "target lag behind the channels");
  synth_cmd->add_option("--target-noise", synth_opts.spec.target_noise_sigma,
                        "target noise sigma");
  synth_cmd->add_option("--seed", synth_opts.spec.seed, "generator seed");
  synth_cmd->callback([&] { run_synth(synth_opts); });

  CommonOpts period_opts;
  std::string period_out;
  auto* period_cmd = app.add_subcommand("analyze-period", "detect candidate periods of the target");
  add_common(period_cmd, period_opts, /*with_window=*/false);
  period_cmd->add_option("--out", period_out, "output JSON (default: stdout)");
  period_cmd->callback([&] { run_analyze_period(period_opts, period_out); });

  CommonOpts transform_opts;
  std::string transform_out;
  auto* transform_cmd = app.add_subcommand("transform", "window the series into supervised rows");
  add_common(transform_cmd, transform_opts);
  transform_cmd->add_option("--out", transform_out, "output CSV path")->required();
  transform_cmd->callback([&] { run_transform(transform_opts, transform_out); });

  TrainOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "train one model at a fixed window size");
  add_common(train_cmd, train_opts.common);
  train_cmd->add_option("--out-model", train_opts.out_model, "output model JSON");
  train_cmd->add_option("--out-trace", train_opts.out_trace, "output trace JSON (grid runs)");
  train_cmd->add_option("--grid-hidden", train_opts.grid_hidden, "hidden sizes, e.g. 10,20,50");
  train_cmd->add_option("--grid-seq", train_opts.grid_seq, "sequence lengths, e.g. 100,500");
  train_cmd->add_option("--grid-epochs", train_opts.grid_epochs, "epoch counts, e.g. 10,50");
  train_cmd->callback([&] { run_train(train_opts); });

  CommonOpts tune_opts;
  std::string tune_model, tune_trace;
  auto* tune_cmd = app.add_subcommand("tune", "tune the window size over detected periods");
  add_common(tune_cmd, tune_opts, /*with_window=*/false);
  tune_cmd->add_option("--out-model", tune_model, "output model JSON");
  tune_cmd->add_option("--out-trace", tune_trace, "output trace JSON");
  tune_cmd->callback([&] { run_tune(tune_opts, tune_model, tune_trace); });

  std::string predict_model, predict_input, predict_out, predict_rows = "all";
  auto* predict_cmd = app.add_subcommand("predict", "run a saved model over a series");
  predict_cmd->add_option("--model", predict_model, "model JSON")->required();
  predict_cmd->add_option("--input", predict_input, "input CSV")->required();
  predict_cmd->add_option("--out", predict_out, "output CSV")->required();
  predict_cmd->add_option("--rows", predict_rows, "all | test (the model's holdout rows)");
  predict_cmd->callback(
      [&] { run_predict(predict_model, predict_input, predict_out, predict_rows); });

  CommonOpts compare_opts;
  std::string compare_methods = "persistence,random-forest,lstm-plain,lstm-tuned";
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "evaluate methods under one seed and split");
  add_common(compare_cmd, compare_opts, /*with_window=*/false);
  compare_cmd->add_option("--methods", compare_methods,
                          "comma list: persistence,random-forest,lstm-plain,lstm-tuned");
  compare_cmd->add_option("--out", compare_out, "report JSON path");
  compare_cmd->callback([&] { run_compare(compare_opts, compare_methods, compare_out); });

  PlotOpts plot_opts;
  auto* plots_cmd = app.add_subcommand("emit-plots", "write plot-ready CSV from saved artifacts");
  plots_cmd->add_option("--kind", plot_opts.kind, "plot kind")->required();
  plots_cmd->add_option("--model", plot_opts.model, "model JSON");
  plots_cmd->add_option("--trace", plot_opts.trace, "trace / grid JSON");
  plots_cmd->add_option("--report", plot_opts.report, "comparison report JSON");
  plots_cmd->add_option("--input", plot_opts.input, "input CSV (pred-vs-actual)");
  plots_cmd->add_option("--out", plot_opts.out, "output CSV path")->required();
  plots_cmd->callback([&] { run_emit_plots(plot_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: divergence: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
