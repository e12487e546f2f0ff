#include <catch_amalgamated.hpp>

#include <cmath>

#include <flowcast/importance.hpp>
#include <flowcast/rng.hpp>

#include "support/oracles.hpp"

using namespace flowcast;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1, double hi = 1) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

double std_dev(std::span<const double> v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("constant target yields single-leaf trees and uniform importances") {
  Rng rng(1);
  const Matrix x = random_matrix(60, 4, rng);
  const std::vector<double> y(60, 5.0);
  const Forest forest = fit_forest(x, y, {.n_trees = 10, .seed = 3});
  for (double p : forest_predict(forest, x)) CHECK(p == 5.0);
  const ImportanceRanking ranking = rank_importances(forest);
  for (const auto& [col, w] : ranking.entries) CHECK(w == 0.25);
}

TEST_CASE("forest learns an exact functional relation") {
  Rng rng(2);
  const Matrix x = random_matrix(200, 3, rng);
  std::vector<double> y(200);
  for (std::size_t r = 0; r < 200; ++r) y[r] = x(r, 0);
  ForestConfig cfg;
  cfg.n_trees = 50;
  cfg.min_samples_leaf = 2;
  cfg.features_per_split = 3;
  cfg.seed = 7;
  const Forest forest = fit_forest(x, y, cfg);
  const std::vector<double> pred = forest_predict(forest, x);
  CHECK(oracles::naive_rmse(pred, y) < 0.1 * std_dev(y));
}

TEST_CASE("forest fitting is deterministic per seed") {
  Rng rng(3);
  const Matrix x = random_matrix(80, 3, rng);
  std::vector<double> y(80);
  for (std::size_t r = 0; r < 80; ++r) y[r] = x(r, 0) + 0.3 * x(r, 1);
  ForestConfig cfg;
  cfg.n_trees = 12;
  cfg.seed = 11;
  const Forest a = fit_forest(x, y, cfg);
  const Forest b = fit_forest(x, y, cfg);
  CHECK(a.trees == b.trees);
  CHECK(a.impurity_decrease == b.impurity_decrease);
  cfg.seed = 12;
  const Forest c = fit_forest(x, y, cfg);
  CHECK(a.trees != c.trees);
}

TEST_CASE("importance concentrates on the driving feature") {
  Rng rng(4);
  const std::size_t rows = 300;
  Matrix x(rows, 2);
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    x(r, 0) = rng.uniform(-1, 1);
    x(r, 1) = rng.uniform(-1, 1);  // independent noise column
    y[r] = 3.0 * x(r, 0) + 0.01 * rng.normal();
  }
  ForestConfig cfg;
  cfg.n_trees = 40;
  cfg.features_per_split = 2;
  cfg.seed = 5;
  const Forest forest = fit_forest(x, y, cfg);
  const ImportanceRanking ranking = rank_importances(forest);
  REQUIRE(ranking.entries[0].first == 0);
  CHECK(ranking.entries[0].second > 0.9);

  // independent check: permuting the driving column hurts most
  const auto perm = oracles::permutation_importance(forest, x, y, 99);
  CHECK(perm[0] > perm[1]);
}

TEST_CASE("importance weights sum to one") {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = random_matrix(100, 3 + trial, rng);
    std::vector<double> y(100);
    for (std::size_t r = 0; r < 100; ++r) y[r] = x(r, 0) * x(r, 1);
    const Forest forest =
        fit_forest(x, y, {.n_trees = 15, .seed = static_cast<std::uint64_t>(trial)});
    double total = 0;
    for (const auto& [col, w] : rank_importances(forest).entries) total += w;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("the driving feature outranks noise for every seed") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(1234, seed));
    Matrix x(150, 2);
    std::vector<double> y(150);
    for (std::size_t r = 0; r < 150; ++r) {
      x(r, 0) = rng.uniform(-1, 1);
      x(r, 1) = rng.uniform(-1, 1);
      y[r] = x(r, 0);
    }
    const Forest forest = fit_forest(x, y, {.n_trees = 20, .seed = seed});
    const ImportanceRanking ranking = rank_importances(forest);
    CHECK(ranking.entries[0].first == 0);
    CHECK(ranking.entries[0].second > ranking.entries[1].second);
  }
}

TEST_CASE("rank_importances is permutation-equivariant") {
  Rng rng(8);
  const std::size_t rows = 120, cols = 4;
  Matrix x(rows, cols);
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) x(r, c) = rng.uniform(-1, 1);
    y[r] = 2 * x(r, 0) + x(r, 2) + 0.05 * rng.normal();
  }
  // full feature consideration so candidate sampling cannot differ
  ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.features_per_split = static_cast<int>(cols);
  cfg.seed = 21;
  const Forest base = fit_forest(x, y, cfg);

  const std::vector<std::size_t> perm{2, 0, 3, 1};  // new column c holds old perm[c]
  Matrix shuffled(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) shuffled(r, c) = x(r, perm[c]);
  }
  const Forest permuted = fit_forest(shuffled, y, cfg);

  std::vector<double> weight_base(cols), weight_perm(cols);
  for (const auto& [col, w] : rank_importances(base).entries) weight_base[col] = w;
  for (const auto& [col, w] : rank_importances(permuted).entries) weight_perm[col] = w;
  for (std::size_t c = 0; c < cols; ++c) {
    CHECK_THAT(weight_perm[c], Catch::Matchers::WithinAbs(weight_base[perm[c]], 1e-12));
  }
}

TEST_CASE("select_features follows the cumulative threshold loop") {
  auto ranking_of = [](std::initializer_list<double> weights) {
    ImportanceRanking r;
    std::size_t c = 0;
    for (double w : weights) r.entries.emplace_back(c++, w);
    return r;
  };
  SECTION("0.6 then 0.4 selects both") {
    const FeatureSet s = select_features(ranking_of({0.6, 0.4}));
    CHECK(s.selected == std::vector<std::size_t>{0, 1});
    CHECK_THAT(s.cumulative_weight, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  SECTION("0.96 crosses immediately") {
    const FeatureSet s = select_features(ranking_of({0.96, 0.04}));
    CHECK(s.selected == std::vector<std::size_t>{0});
  }
  SECTION("single feature") {
    const FeatureSet s = select_features(ranking_of({1.0}));
    CHECK(s.selected == std::vector<std::size_t>{0});
    CHECK(s.cumulative_weight == 1.0);
  }
  SECTION("result is a minimal prefix over random weight vectors") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t m = 2 + rng.below(10);
      std::vector<double> w(m);
      double total = 0;
      for (double& v : w) {
        v = rng.uniform(0.01, 1.0);
        total += v;
      }
      for (double& v : w) v /= total;
      std::sort(w.begin(), w.end(), std::greater<>());
      ImportanceRanking r;
      for (std::size_t c = 0; c < m; ++c) r.entries.emplace_back(c, w[c]);
      const FeatureSet s = select_features(r, 0.95);
      CHECK(s.cumulative_weight > 0.95);
      double without_last = s.cumulative_weight - w[s.selected.size() - 1];
      CHECK(without_last <= 0.95);
      for (std::size_t i = 0; i < s.selected.size(); ++i) CHECK(s.selected[i] == i);
    }
  }
  SECTION("threshold validation") {
    CHECK_THROWS_AS(select_features(ranking_of({1.0}), 1.0), ConfigError);
    CHECK_THROWS_AS(select_features(ranking_of({1.0}), 0.0), ConfigError);
  }
}

TEST_CASE("forest_predict hand-evaluated trees") {
  Forest forest;
  forest.n_features = 2;
  Tree t;
  t.nodes = {{0, 0.5, 1, 2, 0.0}, {-1, 0, -1, -1, 1.0}, {-1, 0, -1, -1, 2.0}};
  forest.trees = {t};
  forest.impurity_decrease = {1.0, 0.0};
  Matrix x(1, 2);
  x(0, 0) = 0.2;
  x(0, 1) = 9.0;
  CHECK(forest_predict(forest, x)[0] == 1.0);
  x(0, 0) = 0.7;
  CHECK(forest_predict(forest, x)[0] == 2.0);

  // prediction is the mean of tree outputs
  Tree constant;
  constant.nodes = {{-1, 0, -1, -1, 4.0}};
  forest.trees = {t, constant};
  CHECK(forest_predict(forest, x)[0] == 3.0);

  CHECK_THROWS_AS(forest_predict(forest, Matrix(1, 3)), DataError);
}

TEST_CASE("a single unbootstrapped tree memorizes its training data") {
  Rng rng(17);
  const std::size_t rows = 64;
  Matrix x(rows, 2);
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    x(r, 0) = rng.uniform(-10, 10);
    x(r, 1) = rng.uniform(-10, 10);
    y[r] = rng.uniform(-10, 10);
  }
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.min_samples_leaf = 1;
  cfg.features_per_split = 2;
  cfg.bootstrap = false;
  const Forest forest = fit_forest(x, y, cfg);
  const std::vector<double> pred = forest_predict(forest, x);
  for (std::size_t r = 0; r < rows; ++r) CHECK_THAT(pred[r], Catch::Matchers::WithinAbs(y[r], 1e-12));
}

TEST_CASE("max_depth caps the tree height") {
  Rng rng(23);
  const Matrix x = random_matrix(100, 2, rng);
  std::vector<double> y(100);
  for (std::size_t r = 0; r < 100; ++r) y[r] = x(r, 0) + x(r, 1);
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.max_depth = 1;
  cfg.min_samples_leaf = 1;
  const Forest forest = fit_forest(x, y, cfg);
  for (const Tree& tree : forest.trees) CHECK(tree.nodes.size() <= 3);
}

TEST_CASE("fit_forest validation") {
  Rng rng(19);
  const Matrix x = random_matrix(20, 2, rng);
  const std::vector<double> y(20, 1.0);
  CHECK_THROWS_AS(fit_forest(Matrix(20, 0), y, {}), DataError);
  CHECK_THROWS_AS(fit_forest(x, std::vector<double>(19, 1.0), {}), DataError);
  CHECK_THROWS_AS(fit_forest(x, y, {.min_samples_leaf = 11}), DataError);
  CHECK_THROWS_AS(fit_forest(x, y, {.n_trees = 0}), ConfigError);
}
