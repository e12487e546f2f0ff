// End-to-end library walkthrough: generate a periodic series, detect its
// candidate periods, tune the window size, and compare against baselines.

#include <iostream>

#include <flowcast/flowcast.hpp>

int main() {
  using namespace flowcast;

  SynthSpec spec;
  spec.rows = 2000;
  spec.channels = {{1.0, 20, std::numeric_limits<double>::quiet_NaN(), 0.05}};
  spec.distractors = 3;
  spec.target_lag = 3;
  spec.target_noise_sigma = 0.05;
  spec.seed = 11;
  auto [series, truth] = gen_periodic(spec);
  std::cout << "series: " << series.rows() << " rows, " << series.cols() << " columns\n";

  const PeriodSet periods = cycle(series.target());
  std::cout << "candidate periods:";
  for (int p : periods.periods) std::cout << ' ' << p;
  std::cout << " (true half-period " << truth.dominant_half_period << ")\n";

  PipelineConfig config;
  config.forest.n_trees = 40;
  config.lstm.seq_len = 100;
  config.lstm.hidden_dim = 16;
  config.lstm.epochs = 8;
  config.lstm.learning_rate = 0.01;

  const TunedResult tuned = optimized_lstm(series, config, /*seed=*/3);
  for (const TraceEntry& e : tuned.trace) {
    if (e.skipped) {
      std::cout << "  n=" << e.n << " skipped (" << e.reason << ")\n";
    } else {
      std::cout << "  n=" << e.n << " test rmse " << e.rmse << "\n";
    }
  }
  std::cout << "tuned: n=" << tuned.best_n << " rmse " << tuned.best_rmse << "\n";

  const ComparisonReport report =
      compare(series, {"persistence", "lstm-plain", "lstm-tuned"}, config, /*seed=*/3);
  for (const MethodResult& r : report.methods) {
    std::cout << r.name << ": rmse " << r.rmse << "\n";
  }
  return 0;
}
