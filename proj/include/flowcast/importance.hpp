#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/matrix.hpp"
#include "flowcast/rng.hpp"

namespace flowcast {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 0;           // 0 = unlimited
  int min_samples_leaf = 5;
  int features_per_split = 0;  // 0 = ceil(m / 3)
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// Binary regression tree stored as a flat node array; node 0 is the root.
// Rows with x[feature] < threshold go left.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[i].feature >= 0) {
      i = x[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left
                                                                             : nodes[i].right;
    }
    return nodes[i].value;
  }

  bool operator==(const Tree&) const = default;
};

struct Forest {
  std::vector<Tree> trees;
  std::size_t n_features = 0;
  // Variance reduction (sum-of-squares decrease) credited to each feature,
  // summed over all split nodes of all trees.
  std::vector<double> impurity_decrease;
};

// (column index, weight) sorted descending by weight; weights sum to 1.
struct ImportanceRanking {
  std::vector<std::pair<std::size_t, double>> entries;
};

struct FeatureSet {
  std::vector<std::size_t> selected;  // prefix of the ranking, importance order
  double cumulative_weight = 0.0;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestConfig& cfg,
              int features_per_split, Rng& rng, std::vector<double>& importance)
      : x_(x), y_(y), cfg_(cfg), k_(features_per_split), rng_(rng), importance_(importance) {
    feature_ids_.resize(x.cols());
  }

  Tree build(std::vector<std::uint32_t> rows) {
    idx_ = std::move(rows);
    tree_.nodes.clear();
    grow(0, static_cast<std::uint32_t>(idx_.size()), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
  };

  int grow(std::uint32_t begin, std::uint32_t end, int depth) {
    const std::uint32_t size = end - begin;
    double sum = 0.0, sumsq = 0.0;
    for (std::uint32_t i = begin; i < end; ++i) {
      const double v = y_[idx_[i]];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / size;
    const double sse = sumsq - sum * sum / size;

    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({-1, 0.0, -1, -1, mean});

    const bool depth_ok = cfg_.max_depth == 0 || depth < cfg_.max_depth;
    if (!depth_ok || size < 2 * static_cast<std::uint32_t>(cfg_.min_samples_leaf) || sse <= 0.0) {
      return node;
    }

    const Split best = best_split(begin, end, sum);
    if (best.feature < 0) return node;

    importance_[static_cast<std::size_t>(best.feature)] += best.gain;

    // Stable partition keeps row order deterministic inside the children.
    scratch_.clear();
    std::uint32_t mid = begin;
    for (std::uint32_t i = begin; i < end; ++i) {
      const std::uint32_t row = idx_[i];
      if (x_(row, static_cast<std::size_t>(best.feature)) < best.threshold) {
        idx_[mid++] = row;
      } else {
        scratch_.push_back(row);
      }
    }
    std::copy(scratch_.begin(), scratch_.end(), idx_.begin() + mid);

    tree_.nodes[static_cast<std::size_t>(node)].feature = best.feature;
    tree_.nodes[static_cast<std::size_t>(node)].threshold = best.threshold;
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    tree_.nodes[static_cast<std::size_t>(node)].left = left;
    tree_.nodes[static_cast<std::size_t>(node)].right = right;
    return node;
  }

  Split best_split(std::uint32_t begin, std::uint32_t end, double total_sum) {
    const std::uint32_t size = end - begin;
    const auto min_leaf = static_cast<std::uint32_t>(cfg_.min_samples_leaf);

    std::iota(feature_ids_.begin(), feature_ids_.end(), std::size_t{0});
    const std::size_t m = feature_ids_.size();
    for (std::size_t i = 0; i < static_cast<std::size_t>(k_); ++i) {
      std::swap(feature_ids_[i], feature_ids_[i + rng_.below(m - i)]);
    }

    Split best;
    const double parent_score = total_sum * total_sum / size;
    for (std::size_t ci = 0; ci < static_cast<std::size_t>(k_); ++ci) {
      const std::size_t f = feature_ids_[ci];
      sorted_.clear();
      for (std::uint32_t i = begin; i < end; ++i) {
        sorted_.emplace_back(x_(idx_[i], f), y_[idx_[i]]);
      }
      std::sort(sorted_.begin(), sorted_.end());

      double left_sum = 0.0;
      for (std::uint32_t i = 0; i + 1 < size; ++i) {
        left_sum += sorted_[i].second;
        const std::uint32_t nl = i + 1, nr = size - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        if (!(sorted_[i].first < sorted_[i + 1].first)) continue;
        const double right_sum = total_sum - left_sum;
        const double gain =
            left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
        double mid = sorted_[i].first + (sorted_[i + 1].first - sorted_[i].first) / 2.0;
        if (!(mid > sorted_[i].first)) mid = sorted_[i + 1].first;
        // Exact gain ties go to the smaller threshold: a content-based rule,
        // so column order never changes the fitted tree.
        if (gain > best.gain || (gain == best.gain && best.feature >= 0 && mid < best.threshold)) {
          best = {gain, static_cast<int>(f), mid};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestConfig& cfg_;
  int k_;
  Rng& rng_;
  std::vector<double>& importance_;
  std::vector<std::uint32_t> idx_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> feature_ids_;
  std::vector<std::pair<double, double>> sorted_;
  Tree tree_;
};

}  // namespace detail

// Fits a variance-reduction regression forest. Each tree draws its own seed
// from (config.seed, tree index), so results are identical for any worker
// count or execution order.
inline Forest fit_forest(const Matrix& features, std::span<const double> target,
                         const ForestConfig& config) {
  const std::size_t rows = features.rows();
  const std::size_t m = features.cols();
  if (m == 0) throw DataError("fit_forest: empty feature set");
  if (rows != target.size()) throw DataError("fit_forest: feature/target row mismatch");
  if (config.n_trees < 1) throw ConfigError("fit_forest: n_trees must be >= 1");
  if (config.min_samples_leaf < 1) throw ConfigError("fit_forest: min_samples_leaf must be >= 1");
  if (rows < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
    throw DataError("fit_forest: need at least 2*min_samples_leaf rows, got " +
                    std::to_string(rows));
  }
  int k = config.features_per_split > 0 ? config.features_per_split
                                        : static_cast<int>((m + 2) / 3);
  k = std::min<int>(k, static_cast<int>(m));

  Forest forest;
  forest.n_features = m;
  forest.trees.resize(static_cast<std::size_t>(config.n_trees));
  std::vector<std::vector<double>> per_tree_importance(
      forest.trees.size(), std::vector<double>(m, 0.0));

  auto fit_one = [&](std::size_t t) {
    Rng rng(mix_seed(config.seed, t));
    std::vector<std::uint32_t> rows_idx(rows);
    if (config.bootstrap) {
      for (auto& r : rows_idx) r = static_cast<std::uint32_t>(rng.below(rows));
    } else {
      std::iota(rows_idx.begin(), rows_idx.end(), 0u);
    }
    detail::TreeBuilder builder(features, target, config, k, rng, per_tree_importance[t]);
    forest.trees[t] = builder.build(std::move(rows_idx));
  };

  const int workers = std::min<int>(thread_budget(), config.n_trees);
  if (workers <= 1) {
    for (std::size_t t = 0; t < forest.trees.size(); ++t) fit_one(t);
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t t = static_cast<std::size_t>(w); t < forest.trees.size();
             t += static_cast<std::size_t>(workers)) {
          fit_one(t);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  forest.impurity_decrease.assign(m, 0.0);
  for (const auto& imp : per_tree_importance) {
    for (std::size_t f = 0; f < m; ++f) forest.impurity_decrease[f] += imp[f];
  }
  return forest;
}

inline std::vector<double> forest_predict(const Forest& forest, const Matrix& features) {
  if (features.cols() != forest.n_features) {
    throw DataError("forest_predict: expected " + std::to_string(forest.n_features) +
                    " features, got " + std::to_string(features.cols()));
  }
  std::vector<double> out(features.rows(), 0.0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    double sum = 0.0;
    for (const Tree& tree : forest.trees) sum += tree.predict(features.row(r));
    out[r] = sum / static_cast<double>(forest.trees.size());
  }
  return out;
}

// Normalized impurity importances, descending. A forest with no splits at all
// (constant target) yields uniform weights so selection stays total.
inline ImportanceRanking rank_importances(const Forest& forest) {
  if (forest.trees.empty()) throw DataError("rank_importances: empty forest");
  const std::size_t m = forest.n_features;
  const double total =
      std::accumulate(forest.impurity_decrease.begin(), forest.impurity_decrease.end(), 0.0);
  ImportanceRanking ranking;
  ranking.entries.reserve(m);
  for (std::size_t f = 0; f < m; ++f) {
    const double w = total > 0.0 ? forest.impurity_decrease[f] / total
                                 : 1.0 / static_cast<double>(m);
    ranking.entries.emplace_back(f, w);
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranking;
}

// Shortest ranking prefix whose cumulative weight strictly exceeds the
// threshold; the crossing feature is included.
inline FeatureSet select_features(const ImportanceRanking& ranking, double threshold = 0.95) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("select_features: threshold must be in (0, 1)");
  }
  FeatureSet set;
  for (const auto& [column, weight] : ranking.entries) {
    set.selected.push_back(column);
    set.cumulative_weight += weight;
    if (set.cumulative_weight > threshold) break;
  }
  return set;
}

}  // namespace flowcast
