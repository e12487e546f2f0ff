#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>

#include <flowcast/period.hpp>
#include <flowcast/synth.hpp>
#include <flowcast/tuner.hpp>

#include "support/oracles.hpp"

using namespace flowcast;

TEST_CASE("generation is deterministic per seed") {
  SynthSpec spec;
  spec.rows = 200;
  spec.channels = {{1.0, 20, std::numeric_limits<double>::quiet_NaN(), 0.1}};
  spec.distractors = 2;
  spec.seed = 9;
  const auto [a, ta] = gen_periodic(spec);
  const auto [b, tb] = gen_periodic(spec);
  CHECK(a.values == b.values);
  spec.seed = 10;
  const auto [c, tc] = gen_periodic(spec);
  CHECK(a.values != c.values);
}

TEST_CASE("a clean period-20 channel yields the half-period") {
  SynthSpec spec;
  spec.rows = 400;
  spec.channels = {{1.0, 20, std::numeric_limits<double>::quiet_NaN(), 0.0}};
  spec.distractors = 1;
  spec.seed = 4;
  const auto [series, truth] = gen_periodic(spec);
  CHECK(truth.dominant_half_period == 10);
  CHECK(truth.target_column == 2);
  CHECK(cycle(series.target()).periods == std::vector<int>{10});
}

TEST_CASE("column layout and names") {
  SynthSpec spec;
  spec.rows = 120;
  spec.channels = {{1.0, 8, std::numeric_limits<double>::quiet_NaN(), 0.0},
                   {0.5, 16, std::numeric_limits<double>::quiet_NaN(), 0.0}};
  spec.distractors = 2;
  spec.target_weights = {0.2, 1.0};
  spec.seed = 1;
  const auto [series, truth] = gen_periodic(spec);
  CHECK(series.column_names ==
        std::vector<std::string>{"ch1", "ch2", "noise1", "noise2", "y"});
  CHECK(truth.informative_columns == std::vector<std::size_t>{0, 1});
  // the dominant channel is the heaviest-weighted one
  CHECK(truth.dominant_half_period == 8);
}

TEST_CASE("modal run length matches the declared half-period on clean data") {
  for (int period : {8, 20, 50}) {
    SynthSpec spec;
    spec.rows = static_cast<std::size_t>(20 * period);
    spec.channels = {{2.0, period, std::numeric_limits<double>::quiet_NaN(), 0.0}};
    spec.distractors = 0;
    spec.seed = 3;
    const auto [series, truth] = gen_periodic(spec);
    const auto runs = oracles::brute_force_runs(series.target());
    std::map<int, int> counts;
    for (int r : runs) counts[r]++;
    const int modal =
        std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
          return a.second < b.second;
        })->first;
    CHECK(std::abs(modal - truth.dominant_half_period) <= 1);
  }
}

TEST_CASE("feature selection finds the informative channel first") {
  SynthSpec spec;
  spec.rows = 1200;
  spec.channels = {{1.0, 20, std::numeric_limits<double>::quiet_NaN(), 0.0}};
  spec.distractors = 3;
  spec.seed = 6;
  const auto [series, truth] = gen_periodic(spec);

  PipelineConfig cfg;
  cfg.forest.n_trees = 30;
  const FeatureSelection sel = select_pipeline_features(series, cfg, 15);
  REQUIRE(!sel.ranking.entries.empty());
  CHECK(sel.ranking.entries[0].first == 0);  // ch1 outranks the noise columns
  CHECK(sel.columns[0] == 0);
  CHECK(sel.names[0] == "ch1");

  // independent permutation-importance oracle agrees
  Matrix x(series.rows(), series.cols() - 1);
  for (std::size_t r = 0; r < series.rows(); ++r) {
    for (std::size_t c = 0; c + 1 < series.cols(); ++c) x(r, c) = series.values(r, c);
  }
  const std::vector<double> y = series.target();
  ForestConfig fc = cfg.forest;
  fc.seed = 77;
  const Forest forest = fit_forest(x, y, fc);
  const auto perm = oracles::permutation_importance(forest, x, y, 5);
  CHECK(std::max_element(perm.begin(), perm.end()) == perm.begin());
}

TEST_CASE("spec validation") {
  SynthSpec spec;
  spec.rows = 30;  // < 4 * period
  CHECK_THROWS_AS(gen_periodic(spec), ConfigError);
  spec.rows = 200;
  spec.channels.clear();
  CHECK_THROWS_AS(gen_periodic(spec), ConfigError);
  spec.channels = {ChannelSpec{}};
  spec.target_weights = {1.0, 2.0};
  CHECK_THROWS_AS(gen_periodic(spec), ConfigError);
}
