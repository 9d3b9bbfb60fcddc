#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aif/parallel.hpp"
#include "aif/suite.hpp"
#include "aif/types.hpp"

namespace aif::ela {

struct SampleDesign {
  Matrix x;  // n x D, inside [-5, 5]^D
  Vector y;  // y[i] == instance.evaluate(x.row(i))
  std::uint64_t seed = 0;
};

/// n x d Latin hypercube over [-5, 5]^d: each column visits every one of the
/// n equal-width strata exactly once.
Matrix latin_hypercube(int n, int d, std::uint64_t seed);

/// Throws ConfigError when n < 10 * D.
SampleDesign sample_design(const suite::ProblemInstance& instance, int n, std::uint64_t seed);

/// Wraps an arbitrary (x, y) sample; used by tests and by callers that
/// evaluate their own designs.
SampleDesign make_design(Matrix x, Vector y);

/// Symmetric Euclidean distance matrix. The serial version is the reference
/// the OpenMP kernel is tested against.
Matrix pairwise_distances(const Matrix& x, const Execution& exec = Execution::openmp());
Matrix pairwise_distances_serial(const Matrix& x);

struct Feature {
  std::string name;
  double value = 0.0;
};
using FeatureList = std::vector<Feature>;

// --- dispersion ---------------------------------------------------------

struct Dispersion {
  double ratio_mean = 1.0;
  double diff_mean = 0.0;
  double ratio_median = 1.0;
  double diff_median = 0.0;
};

/// Compares the best `fraction` of the sample (at least two points, ties by
/// lowest index) against the whole sample. fraction = 1 compares the sample
/// with itself.
Dispersion dispersion_at(const SampleDesign& design, double fraction);

/// q in {2, 5, 10, 25} %: disp.{ratio,diff}_{mean,median}_qq.
FeatureList disp_features(const SampleDesign& design);

// --- information content -------------------------------------------------

/// Greedy nearest-neighbour tour starting at point 0.
std::vector<int> nearest_neighbor_tour(const Matrix& distances);

/// Symbols in {-1, 0, 1} of successive differences against threshold eps.
std::vector<int> ic_symbols(std::span<const double> diffs, double eps);

/// Entropy (bits) of consecutive symbol pairs with distinct symbols.
double ic_entropy(std::span<const int> symbols);

/// Fraction of symbols left after removing zeros and collapsing repeats.
double ic_partial_information(std::span<const int> symbols);

/// ic.h_max, ic.eps_s, ic.eps_max, ic.eps_ratio, ic.m0.
FeatureList ic_features(const SampleDesign& design);

// --- nearest better clustering -------------------------------------------

/// nbc.nn_nb.mean_ratio, nbc.nn_nb.sd_ratio, nbc.nn_nb.cor,
/// nbc.dist_ratio.coeff_var, nbc.nb_fitness.cor.
FeatureList nbc_features(const SampleDesign& design);

// --- meta-model ------------------------------------------------------------

struct MetaModelResult {
  FeatureList features;
  int ridge_fallbacks = 0;
};

/// Least-squares fits: linear, linear + interactions, quadratic, quadratic +
/// interactions. Throws ConfigError when n does not exceed the largest model's
/// coefficient count.
MetaModelResult meta_model_features(const SampleDesign& design);

// --- level sets ------------------------------------------------------------

enum class Discriminant { Linear, Quadratic };

/// Stratified k-fold misclassification rate of a Gaussian discriminant
/// classifier for binary labels (0/1).
double cv_misclassification(const Matrix& x, std::span<const int> labels, Discriminant kind,
                            int folds = 5);

/// For q in {10, 25, 50} %: ela_level.mmce_lda_q, ela_level.mmce_qda_q,
/// ela_level.lda_qda_q.
FeatureList level_features(const SampleDesign& design);

// --- PCA -------------------------------------------------------------------

/// pca.expl_var.{cov,cor}_{x,init} and pca.expl_var_PC1.{cov,cor}_{x,init}.
FeatureList pca_features(const SampleDesign& design);

// --- full vector -----------------------------------------------------------

struct FeatureSpec {
  std::string name;
  std::string group;
};

/// Fixed catalog order; independent of any data.
const std::vector<FeatureSpec>& schema();

struct ElaFeatureVector {
  InstanceKey key;
  std::vector<double> values;  // schema order
  int sanitized = 0;           // non-finite values replaced by 0
  int ridge_fallbacks = 0;
};

/// Computes every group on one design.
ElaFeatureVector extract_from_design(const SampleDesign& design, const InstanceKey& key);

ElaFeatureVector extract_all(const suite::ProblemInstance& instance, int n, std::uint64_t seed);

std::uint64_t sample_seed_for(std::uint64_t master_seed, const InstanceKey& key);

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<InstanceKey> keys;
  Matrix values;  // one row per key
  int sanitized = 0;
  int ridge_fallbacks = 0;

  std::size_t row_of(const InstanceKey& key) const;
  std::size_t column_of(const std::string& name) const;
};

/// One row per instance, n = sample_multiplier * D points each.
FeatureMatrix extract_matrix(std::span<const suite::ProblemInstance> instances,
                             int sample_multiplier, std::uint64_t master_seed,
                             const Execution& exec);

void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in);
void write_schema_json(std::ostream& out);

}  // namespace aif::ela
