#include <algorithm>
#include <cmath>
#include <limits>

#include "aif/errors.hpp"
#include "detail.hpp"

namespace aif::ela {
namespace {

constexpr double kLevelFractions[] = {0.10, 0.25, 0.50};
constexpr double kRegularization = 1e-6;

Eigen::LDLT<Eigen::MatrixXd> factor(Eigen::MatrixXd cov) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12) {
    cov += kRegularization * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    ldlt.compute(cov);
  }
  return ldlt;
}

struct ClassModel {
  Eigen::VectorXd mean;
  Eigen::LDLT<Eigen::MatrixXd> cov;
  double log_prior = 0.0;
  double log_det = 0.0;
  bool present = false;
};

double mahalanobis(const ClassModel& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd diff = x - m.mean;
  return diff.dot(m.cov.solve(diff));
}

double log_det(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  return ldlt.vectorD().array().abs().log().sum();
}

}  // namespace

double cv_misclassification(const Matrix& x, std::span<const int> labels, Discriminant kind,
                            int folds) {
  const auto n = static_cast<int>(x.rows());
  const auto d = x.cols();
  if (static_cast<int>(labels.size()) != n) throw ContractViolation("labels/rows mismatch");
  if (folds < 2) throw ConfigError("cv_misclassification: need at least two folds");

  // Stratified assignment: position within class modulo folds.
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  int seen[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c != 0 && c != 1) throw ContractViolation("labels must be 0 or 1");
    fold_of[static_cast<std::size_t>(i)] = seen[c]++ % folds;
  }

  int errors = 0;
  for (int f = 0; f < folds; ++f) {
    ClassModel models[2];
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    int n_train = 0;
    for (int c = 0; c < 2; ++c) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i) {
        if (fold_of[static_cast<std::size_t>(i)] != f && labels[static_cast<std::size_t>(i)] == c) {
          rows.push_back(i);
        }
      }
      if (rows.empty()) continue;
      auto& m = models[c];
      m.present = true;
      m.mean = Eigen::VectorXd::Zero(d);
      for (int i : rows) m.mean += x.row(i).transpose();
      m.mean /= static_cast<double>(rows.size());
      Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
      for (int i : rows) {
        const Eigen::VectorXd diff = x.row(i).transpose() - m.mean;
        scatter.noalias() += diff * diff.transpose();
      }
      pooled += scatter;
      n_train += static_cast<int>(rows.size());
      m.log_prior = std::log(static_cast<double>(rows.size()));
      if (kind == Discriminant::Quadratic) {
        const double denom = rows.size() > 1 ? static_cast<double>(rows.size() - 1) : 1.0;
        m.cov = factor(scatter / denom);
        m.log_det = log_det(m.cov);
      }
    }
    if (kind == Discriminant::Linear) {
      const double denom = std::max(1, n_train - 2);
      const auto shared = factor(pooled / denom);
      for (auto& m : models) {
        if (m.present) m.cov = shared;
      }
    }

    for (int i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] != f) continue;
      const Eigen::VectorXd xi = x.row(i).transpose();
      double score[2] = {-std::numeric_limits<double>::infinity(),
                         -std::numeric_limits<double>::infinity()};
      for (int c = 0; c < 2; ++c) {
        if (!models[c].present) continue;
        score[c] = models[c].log_prior - 0.5 * mahalanobis(models[c], xi);
        if (kind == Discriminant::Quadratic) score[c] -= 0.5 * models[c].log_det;
      }
      const int predicted = score[1] > score[0] ? 1 : 0;
      if (predicted != labels[static_cast<std::size_t>(i)]) ++errors;
    }
  }
  return static_cast<double>(errors) / n;
}

FeatureList level_features(const SampleDesign& design) {
  const auto n = static_cast<int>(design.y.size());
  if (n < 50) throw ConfigError("level_features needs at least 50 points");
  const auto order = detail::rank_order(design.y);
  FeatureList out;
  for (double q : kLevelFractions) {
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    const auto m = static_cast<std::size_t>(std::floor(q * n + 1e-9));
    for (std::size_t r = 0; r < m; ++r) labels[static_cast<std::size_t>(order[r])] = 1;
    const double lda = cv_misclassification(design.x, labels, Discriminant::Linear);
    const double qda = cv_misclassification(design.x, labels, Discriminant::Quadratic);
    const auto tag = detail::percent_tag(q);
    out.push_back({"ela_level.mmce_lda_" + tag, lda});
    out.push_back({"ela_level.mmce_qda_" + tag, qda});
    out.push_back({"ela_level.lda_qda_" + tag, (lda + 1e-12) / (qda + 1e-12)});
  }
  return out;
}

}  // namespace aif::ela
