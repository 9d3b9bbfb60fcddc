#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aif/parallel.hpp"
#include "aif/types.hpp"

namespace aif::models {

enum class ModelKind { RandomForest, Knn, Kernel };

/// "random_forest", "knn", "kernel".
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
/// Short label for tables: "RF", "KNN", "SVM-surrogate".
std::string_view display_label(ModelKind kind);

// --- folds -----------------------------------------------------------------

struct FoldSplit {
  int fold_id = 0;  // 1..k
  std::vector<InstanceKey> train_keys;
  std::vector<InstanceKey> test_keys;
};

/// Stratified by problem: each problem's instances are permuted with a
/// per-problem seed and slot i goes to fold i. Every problem must have the
/// same instance count, divisible by k; k >= 2.
std::vector<FoldSplit> make_folds(std::span<const InstanceKey> keys, int k, std::uint64_t seed);

/// Columns: fold_id, problem_id, instance_id, dimension (test membership).
void write_folds_csv(std::ostream& out, std::span<const FoldSplit> folds);
/// Rebuilds train sets as the complement of each fold's test set.
std::vector<FoldSplit> read_folds_csv(std::istream& in);

// --- random forest -----------------------------------------------------------

struct ForestParams {
  int n_trees = 100;
  int min_samples_leaf = 2;
  int max_depth = 0;  // 0: unlimited
  int mtry = 0;       // 0: ceil(features / 3)
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: mean target of its training rows
  int cover = 0;
};

/// Node 0 is the root; x[feature] <= threshold descends left.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int depth() const;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<RegressionTree> trees, int n_features)
      : trees_(std::move(trees)), n_features_(n_features) {}

  /// Mean of the tree outputs.
  double predict(std::span<const double> x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }
  int n_features() const { return n_features_; }

 private:
  std::vector<RegressionTree> trees_;
  int n_features_ = 0;
};

/// CART regression trees on bootstrap samples. Per-tree seeds are derived from
/// params.seed before dispatch, so the fitted forest does not depend on `exec`.
RandomForest fit_random_forest(const Matrix& x, std::span<const double> y,
                               const ForestParams& params,
                               const Execution& exec = Execution::openmp());

// --- standardised models ------------------------------------------------------

/// z-score parameters learned from training rows only; zero spread maps to 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x);
  Vector apply(std::span<const double> x) const;
  Matrix apply(const Matrix& x) const;
};

class KnnRegressor {
 public:
  KnnRegressor() = default;
  KnnRegressor(Standardizer s, Matrix train, Vector y, int k)
      : standardizer_(std::move(s)), train_(std::move(train)), y_(std::move(y)), k_(k) {}

  /// Mean target of the k nearest standardised rows; ties favour lower index.
  double predict(std::span<const double> x) const;
  const Standardizer& standardizer() const { return standardizer_; }
  const Matrix& train() const { return train_; }
  const Vector& targets() const { return y_; }
  int k() const { return k_; }

 private:
  Standardizer standardizer_;
  Matrix train_;
  Vector y_;
  int k_ = 1;
};

KnnRegressor fit_knn(const Matrix& x, std::span<const double> y, int k_neighbors);

struct KernelParams {
  double penalty = 0.1;
  double bandwidth = 0.0;  // 0: median pairwise distance of standardised train rows
};

/// RBF kernel ridge regression on centred targets.
class KernelRidge {
 public:
  KernelRidge() = default;
  KernelRidge(Standardizer s, Matrix train, Vector alpha, double y_mean, double bandwidth)
      : standardizer_(std::move(s)), train_(std::move(train)), alpha_(std::move(alpha)),
        y_mean_(y_mean), bandwidth_(bandwidth) {}

  double predict(std::span<const double> x) const;
  const Standardizer& standardizer() const { return standardizer_; }
  const Matrix& train() const { return train_; }
  const Vector& alpha() const { return alpha_; }
  double y_mean() const { return y_mean_; }
  double bandwidth() const { return bandwidth_; }

 private:
  Standardizer standardizer_;
  Matrix train_;
  Vector alpha_;
  double y_mean_ = 0.0;
  double bandwidth_ = 1.0;
};

KernelRidge fit_kernel(const Matrix& x, std::span<const double> y, const KernelParams& params);

// --- common surface ------------------------------------------------------------

using Model = std::variant<RandomForest, KnnRegressor, KernelRidge>;

struct ModelSpec {
  ModelKind kind = ModelKind::RandomForest;
  ForestParams forest;
  int knn_neighbors = 5;
  KernelParams kernel;
};

Model fit_model(const ModelSpec& spec, const Matrix& x, std::span<const double> y,
                const Execution& exec = Execution::openmp());

ModelKind kind_of(const Model& model);
double predict(const Model& model, std::span<const double> x);
Vector predict_rows(const Model& model, const Matrix& x);

struct ModelMetrics {
  double mae = 0.0;
  double r2 = 0.0;
};

/// R^2 on a constant truth vector is 1 when the fit is exact, else 0.
ModelMetrics compute_metrics(std::span<const double> truth, std::span<const double> predicted);
ModelMetrics evaluate_model(const Model& model, const Matrix& x_test, std::span<const double> y_test);

void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);

}  // namespace aif::models
