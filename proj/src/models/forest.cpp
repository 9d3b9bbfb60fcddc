#include <algorithm>
#include <cmath>
#include <numeric>

#include "aif/errors.hpp"
#include "aif/models.hpp"
#include "aif/rng.hpp"

namespace aif::models {
namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // summed squared error of the two children
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestParams& params, int mtry,
              std::uint64_t seed)
      : x_(x), y_(y), params_(params), mtry_(mtry), rng_(seed) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  RegressionTree build(std::vector<int> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<int>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (int r : rows) sum += y_[static_cast<std::size_t>(r)];
    const double mean = sum / static_cast<double>(rows.size());
    {
      auto& node = tree_.nodes.back();
      node.value = mean;
      node.cover = static_cast<int>(rows.size());
    }

    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    const bool depth_reached = params_.max_depth > 0 && depth >= params_.max_depth;
    bool constant = true;
    for (int r : rows) {
      if (y_[static_cast<std::size_t>(r)] != y_[static_cast<std::size_t>(rows.front())]) {
        constant = false;
        break;
      }
    }
    if (depth_reached || constant || rows.size() < 2 * min_leaf) return id;

    const SplitChoice split = best_split(rows, min_leaf);
    if (split.feature < 0) return id;

    std::vector<int> left, right;
    left.reserve(split.left_count);
    right.reserve(rows.size() - split.left_count);
    for (int r : rows) {
      (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  SplitChoice best_split(const std::vector<int>& rows, std::size_t min_leaf) {
    // Partial Fisher-Yates: the first mtry entries are the candidate features.
    const std::size_t m = features_.size();
    const auto take = static_cast<std::size_t>(std::min<int>(mtry_, static_cast<int>(m)));
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(features_[i], features_[i + rng_.index(m - i)]);
    }

    SplitChoice best;
    bool found = false;
    const std::size_t n = rows.size();
    std::vector<int> sorted(rows);
    for (std::size_t fi = 0; fi < take; ++fi) {
      const int f = features_[fi];
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](int a, int b) { return x_(a, f) < x_(b, f); });
      double total = 0.0;
      double total_sq = 0.0;
      for (int r : sorted) {
        const double v = y_[static_cast<std::size_t>(r)];
        total += v;
        total_sq += v * v;
      }
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += y_[static_cast<std::size_t>(sorted[i])];
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double a = x_(sorted[i], f);
        const double b = x_(sorted[i + 1], f);
        if (!(a < b)) continue;
        const double right_sum = total - left_sum;
        const double score = total_sq - left_sum * left_sum / static_cast<double>(nl) -
                             right_sum * right_sum / static_cast<double>(nr);
        if (!found || score < best.score) {
          double threshold = 0.5 * (a + b);
          if (!(threshold < b)) threshold = a;
          best = {f, threshold, score, nl};
          found = true;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestParams& params_;
  int mtry_;
  Rng rng_;
  std::vector<int> features_;
  RegressionTree tree_;
};

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(id)].value;
}

int RegressionTree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& node = nodes[i];
    if (node.feature < 0) continue;
    depth[static_cast<std::size_t>(node.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(node.right)] = depth[i] + 1;
    deepest = std::max(deepest, depth[i] + 1);
  }
  return deepest;
}

double RandomForest::predict(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(n_features_)) {
    throw ContractViolation("forest: expected " + std::to_string(n_features_) + " features");
  }
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(x);
  return s / static_cast<double>(trees_.size());
}

RandomForest fit_random_forest(const Matrix& x, std::span<const double> y,
                               const ForestParams& params, const Execution& exec) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n != y.size()) throw ContractViolation("fit_random_forest: rows(X) != length(y)");
  if (n < 2) throw ContractViolation("fit_random_forest: need at least two rows");
  if (params.n_trees < 1) throw ConfigError("fit_random_forest: n_trees must be >= 1");
  const auto m = static_cast<int>(x.cols());
  const int mtry = params.mtry > 0 ? std::min(params.mtry, m) : std::max(1, (m + 2) / 3);

  std::vector<RegressionTree> trees(static_cast<std::size_t>(params.n_trees));
  parallel_for(trees.size(), exec, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, static_cast<std::uint64_t>(t));
    TreeBuilder builder(x, y, params, mtry, tree_seed);
    std::vector<int> rows(n);
    if (params.bootstrap) {
      Rng boot(derive_seed(tree_seed, "bootstrap"));
      for (auto& r : rows) r = static_cast<int>(boot.index(n));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    trees[t] = builder.build(std::move(rows));
  });
  return RandomForest(std::move(trees), m);
}

}  // namespace aif::models
