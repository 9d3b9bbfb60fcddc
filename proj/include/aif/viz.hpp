#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aif/ela.hpp"
#include "aif/footprint.hpp"
#include "aif/shap.hpp"
#include "aif/types.hpp"

namespace aif::viz {

struct Embedding2D {
  std::string method;
  std::string parameters;
  std::vector<InstanceKey> keys;
  std::vector<std::array<double, 2>> coords;  // parallel to keys

  /// Throws ContractViolation for an unknown key.
  const std::array<double, 2>& at(const InstanceKey& key) const;
};

/// Pluggable 2D projection of meta-representation rows.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding2D embed(const Matrix& rows, std::span<const InstanceKey> keys) const = 0;
};

/// Projection on the top two principal axes of the centred rows. Each axis
/// is oriented so its largest-magnitude loading is positive.
class PcaEmbedder final : public Embedder {
 public:
  Embedding2D embed(const Matrix& rows, std::span<const InstanceKey> keys) const override;
};

/// Default embedding (PCA). Requires at least three rows.
Embedding2D embed_2d(const Matrix& rows, std::span<const InstanceKey> keys);

/// Stacks phi vectors row-wise.
Matrix phi_matrix(std::span<const shap::ShapMetaRepresentation> reps);

// --- figures -----------------------------------------------------------------

/// Colour by algorithm axis (blue good, yellow poor), marker by model axis
/// (circle good, cross poor), problem id next to each point.
std::string footprint_plot_svg(const Embedding2D& embedding,
                               std::span<const footprint::FootprintAssignment> assignments,
                               const std::string& title);

struct BeeswarmRow {
  std::string feature;
  int rank = 0;  // 1 = most important
  InstanceKey key;
  double phi = 0.0;
  double normalized_value = 0.0;  // min-max over the plotted instances; 0.5 if constant
};

/// top_k features of the portfolio ranked by mean |phi| over `reps`, one row
/// per (feature, instance). Feature values come from `values` by key and name.
std::vector<BeeswarmRow> beeswarm_rows(std::span<const shap::ShapMetaRepresentation> reps,
                                       const shap::FeaturePortfolio& portfolio, int top_k,
                                       const ela::FeatureMatrix& values);

/// Columns: feature, rank, problem_id, instance_id, dimension, phi, normalized_value.
void write_beeswarm_csv(std::ostream& out, std::span<const BeeswarmRow> rows);
std::string beeswarm_svg(std::span<const BeeswarmRow> rows, const std::string& title);

/// Scatter at the embedding positions, coloured by the min-max normalised
/// value of one feature. Unknown feature names throw ContractViolation.
std::string feature_distribution_svg(const Embedding2D& embedding, const std::string& feature,
                                     const ela::FeatureMatrix& values);

// --- distribution table --------------------------------------------------------

struct DistributionRow {
  models::ModelKind model_kind = models::ModelKind::RandomForest;
  int fold_id = 0;
  std::array<std::vector<int>, 4> problems;  // label order, ascending, unique
};

/// One row per (model, fold), sorted by model then fold.
std::vector<DistributionRow> distribution_rows(
    std::span<const footprint::FootprintAssignment> assignments);

/// "16, 19, 20"; an empty list renders as an en dash.
std::string format_problem_list(std::span<const int> problems);

/// "RF & 1 & ... & 13 \\"
std::string distribution_latex_row(const DistributionRow& row);

/// Pipe-separated text table with a header line.
std::string distribution_table_text(std::span<const DistributionRow> rows);

/// Columns: model_kind, fold_id, good_good, good_poor, poor_good, poor_poor;
/// problem ids inside a cell are space separated.
void write_distribution_csv(std::ostream& out, std::span<const DistributionRow> rows);

}  // namespace aif::viz
