#include <algorithm>
#include <cmath>

#include "aif/errors.hpp"
#include "detail.hpp"

namespace aif::ela {
namespace {

struct Explained {
  double pc1 = 1.0;
  double fraction_for_90 = 1.0;
};

Explained explained_variance(Eigen::MatrixXd data, bool correlation) {
  const auto n = data.rows();
  const auto p = data.cols();
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  if (correlation) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double sd = std::sqrt(data.col(j).squaredNorm() / static_cast<double>(n - 1));
      if (sd > 0.0) {
        data.col(j) /= sd;
      } else {
        data.col(j).setZero();
      }
    }
  }
  const Eigen::MatrixXd cov = data.transpose() * data / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  const double total = ev.sum();
  if (!(total > 0.0)) return {};
  Explained out;
  out.pc1 = ev[0] / total;
  double cum = 0.0;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    cum += ev[k];
    if (cum / total >= 0.9) {
      out.fraction_for_90 = static_cast<double>(k + 1) / static_cast<double>(p);
      break;
    }
  }
  return out;
}

}  // namespace

FeatureList pca_features(const SampleDesign& design) {
  const auto n = design.x.rows();
  const auto d = design.x.cols();
  if (n <= d) throw ConfigError("pca_features needs more points than dimensions");
  Eigen::MatrixXd x = design.x;
  Eigen::MatrixXd init(n, d + 1);
  init.leftCols(d) = x;
  init.col(d) = design.y;

  const auto cov_x = explained_variance(x, false);
  const auto cor_x = explained_variance(x, true);
  const auto cov_init = explained_variance(init, false);
  const auto cor_init = explained_variance(init, true);
  return {{"pca.expl_var.cov_x", cov_x.fraction_for_90},
          {"pca.expl_var.cor_x", cor_x.fraction_for_90},
          {"pca.expl_var.cov_init", cov_init.fraction_for_90},
          {"pca.expl_var.cor_init", cor_init.fraction_for_90},
          {"pca.expl_var_PC1.cov_x", cov_x.pc1},
          {"pca.expl_var_PC1.cor_x", cor_x.pc1},
          {"pca.expl_var_PC1.cov_init", cov_init.pc1},
          {"pca.expl_var_PC1.cor_init", cor_init.pc1}};
}

}  // namespace aif::ela
