#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowcast/common.hpp"
#include "flowcast/dataset.hpp"
#include "flowcast/rng.hpp"

namespace flowcast {

// One informative sinusoid channel. phase = NaN picks pi/period, a half-sample
// offset that keeps samples strictly off the axis crossings.
struct ChannelSpec {
  double amplitude = 1.0;
  int period = 20;
  double phase = std::numeric_limits<double>::quiet_NaN();
  double noise_sigma = 0.0;
};

struct SynthSpec {
  std::size_t rows = 10000;
  std::vector<ChannelSpec> channels = {ChannelSpec{}};
  std::size_t distractors = 5;        // pure-noise columns
  double distractor_sigma = 1.0;
  std::vector<double> target_weights;  // per channel; empty = all 1.0
  int target_lag = 0;                  // target follows the clean channels lagged this much
  double target_noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  int dominant_half_period = 0;
  std::vector<std::size_t> informative_columns;
  std::size_t target_column = 0;
};

// Deterministic multivariate periodic series: informative sinusoids first,
// then distractor noise columns, target last. The target is a weighted sum of
// the *clean* channel signals at t - lag, plus optional noise. Each column
// draws from its own seed stream, so the layout never perturbs the values.
inline std::pair<RawSeries, GroundTruth> gen_periodic(const SynthSpec& spec) {
  if (spec.channels.empty()) throw ConfigError("synth: need at least one informative channel");
  if (!spec.target_weights.empty() && spec.target_weights.size() != spec.channels.size()) {
    throw ConfigError("synth: target_weights must match the channel count");
  }
  int max_period = 0;
  for (const ChannelSpec& ch : spec.channels) {
    if (ch.period < 2) throw ConfigError("synth: channel period must be >= 2");
    max_period = std::max(max_period, ch.period);
  }
  if (spec.rows < 4 * static_cast<std::size_t>(max_period)) {
    throw ConfigError("synth: need at least 4*max_period rows");
  }
  if (spec.target_lag < 0) throw ConfigError("synth: target_lag must be >= 0");

  std::vector<double> weights = spec.target_weights;
  if (weights.empty()) weights.assign(spec.channels.size(), 1.0);

  const std::size_t k = spec.channels.size();
  const std::size_t m = k + spec.distractors + 1;
  RawSeries series;
  series.values = Matrix(spec.rows, m);
  series.target_index = m - 1;

  auto clean = [&](std::size_t ch, double t) {
    const ChannelSpec& c = spec.channels[ch];
    const double phase = std::isnan(c.phase) ? std::numbers::pi / c.period : c.phase;
    return c.amplitude * std::sin(2.0 * std::numbers::pi * t / c.period + phase);
  };

  for (std::size_t ch = 0; ch < k; ++ch) {
    series.column_names.push_back("ch" + std::to_string(ch + 1));
    Rng rng(mix_seed(spec.seed, ch));
    for (std::size_t t = 0; t < spec.rows; ++t) {
      series.values(t, ch) =
          clean(ch, static_cast<double>(t)) + spec.channels[ch].noise_sigma * rng.normal();
    }
  }
  for (std::size_t d = 0; d < spec.distractors; ++d) {
    series.column_names.push_back("noise" + std::to_string(d + 1));
    Rng rng(mix_seed(spec.seed, 100 + d));
    for (std::size_t t = 0; t < spec.rows; ++t) {
      series.values(t, k + d) = spec.distractor_sigma * rng.normal();
    }
  }
  series.column_names.push_back("y");
  {
    Rng rng(mix_seed(spec.seed, 10000));
    for (std::size_t t = 0; t < spec.rows; ++t) {
      double v = 0.0;
      for (std::size_t ch = 0; ch < k; ++ch) {
        v += weights[ch] * clean(ch, static_cast<double>(t) - spec.target_lag);
      }
      series.values(t, m - 1) = v + spec.target_noise_sigma * rng.normal();
    }
  }

  GroundTruth truth;
  std::size_t dominant = 0;
  for (std::size_t ch = 1; ch < k; ++ch) {
    if (std::abs(weights[ch]) > std::abs(weights[dominant])) dominant = ch;
  }
  truth.dominant_half_period =
      static_cast<int>(std::lround(spec.channels[dominant].period / 2.0));
  for (std::size_t ch = 0; ch < k; ++ch) truth.informative_columns.push_back(ch);
  truth.target_column = m - 1;
  return {std::move(series), truth};
}

inline nlohmann::json ground_truth_to_json(const GroundTruth& truth, const SynthSpec& spec) {
  return {{"dominant_half_period", truth.dominant_half_period},
          {"informative_columns", truth.informative_columns},
          {"target_column", truth.target_column},
          {"rows", spec.rows},
          {"seed", spec.seed}};
}

}  // namespace flowcast
