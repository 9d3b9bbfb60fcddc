#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aif/models.hpp"
#include "aif/parallel.hpp"
#include "aif/types.hpp"

namespace aif::shap {

/// base_value + sum(phi) == prediction.
struct ShapMetaRepresentation {
  InstanceKey key;
  double base_value = 0.0;
  std::vector<double> phi;
  double prediction = 0.0;
  std::vector<double> standard_error;  // empty for exact attributions
};

/// Interventional Shapley values of a single tree for input x against one
/// background row z. Sums to tree(x) - tree(z).
std::vector<double> tree_shap_single(const models::RegressionTree& tree, std::span<const double> x,
                                     std::span<const double> z);

/// Exact interventional attribution for a forest, averaged over trees and
/// background rows.
ShapMetaRepresentation tree_shap(const models::RandomForest& forest, std::span<const double> x,
                                 const Matrix& background);

/// Antithetic permutation sampling with background-imputed absent features.
/// Pairs are rounded up to a multiple of the background size so every
/// background row is used equally often and efficiency holds exactly.
ShapMetaRepresentation sampling_shap(const models::Model& model, std::span<const double> x,
                                     const Matrix& background, int n_permutations,
                                     std::uint64_t seed);

struct ExplainParams {
  int n_permutations = 256;
  /// Sampling only: at most this many background rows, drawn once per call
  /// with a seeded shuffle (0 keeps all). Tree attribution always uses all.
  int max_background = 0;
  std::uint64_t seed = 0;
};

/// One attribution per row of x. Forests use tree_shap, everything else
/// sampling_shap with a per-key seed.
std::vector<ShapMetaRepresentation> explain_rows(const models::Model& model, const Matrix& x,
                                                 std::span<const InstanceKey> keys,
                                                 const Matrix& background,
                                                 const ExplainParams& params,
                                                 const Execution& exec = Execution::openmp());

struct FeatureImportance {
  std::string name;
  double importance = 0.0;
};

/// Mean |phi| per feature; descending, ties by name.
std::vector<FeatureImportance> global_importance(std::span<const ShapMetaRepresentation> reps,
                                                 std::span<const std::string> names);

struct FeaturePortfolio {
  models::ModelKind source = models::ModelKind::RandomForest;
  std::vector<std::string> feature_names;  // descending importance
  std::vector<double> importance;

  int size() const { return static_cast<int>(feature_names.size()); }
};

/// Fits `spec` on the training rows, explains the same rows against
/// themselves and keeps the k most important features.
FeaturePortfolio select_portfolio(const Matrix& train_x, std::span<const double> train_y,
                                  std::span<const std::string> names, int k,
                                  const models::ModelSpec& spec, const ExplainParams& params,
                                  const Execution& exec = Execution::openmp());

/// Column indices of the portfolio features inside `names`.
std::vector<int> portfolio_columns(const FeaturePortfolio& portfolio,
                                   std::span<const std::string> names);

/// Columns: problem_id, instance_id, dimension, base_value, prediction, then
/// one phi column per feature name.
void write_meta_csv(std::ostream& out, std::span<const ShapMetaRepresentation> reps,
                    std::span<const std::string> names);
std::vector<ShapMetaRepresentation> read_meta_csv(std::istream& in, std::vector<std::string>* names);

void write_portfolio_json(std::ostream& out, const FeaturePortfolio& portfolio);
FeaturePortfolio read_portfolio_json(std::istream& in);

}  // namespace aif::shap
