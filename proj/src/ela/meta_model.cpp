#include <algorithm>
#include <cmath>
#include <string>

#include "aif/errors.hpp"
#include "detail.hpp"

namespace aif::ela {
namespace {

struct Fit {
  Vector coef;  // intercept first
  double adj_r2 = 0.0;
  bool ridge = false;
};

Fit least_squares(const Matrix& a, const Vector& y) {
  const auto n = a.rows();
  const auto p = a.cols() - 1;  // predictors, excluding the intercept
  Fit fit;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    const Eigen::MatrixXd gram =
        a.transpose() * a + 1e-10 * Eigen::MatrixXd::Identity(a.cols(), a.cols());
    fit.coef = gram.ldlt().solve(a.transpose() * y);
    fit.ridge = true;
  } else {
    fit.coef = qr.solve(y);
  }
  const double mean = y.mean();
  const double sst = (y.array() - mean).square().sum();
  if (sst <= 0.0) {
    fit.adj_r2 = 0.0;
    return fit;
  }
  const double sse = (y - a * fit.coef).squaredNorm();
  const double r2 = 1.0 - sse / sst;
  fit.adj_r2 = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) / static_cast<double>(n - p - 1);
  return fit;
}

// Columns: 1, x, then optional squares and/or pairwise products.
Matrix model_matrix(const Matrix& x, bool squares, bool interactions) {
  const auto n = x.rows();
  const auto d = x.cols();
  Eigen::Index cols = 1 + d;
  if (squares) cols += d;
  if (interactions) cols += d * (d - 1) / 2;
  Matrix a(n, cols);
  a.col(0).setOnes();
  a.middleCols(1, d) = x;
  Eigen::Index c = 1 + d;
  if (squares) {
    for (Eigen::Index j = 0; j < d; ++j) a.col(c++) = x.col(j).array().square();
  }
  if (interactions) {
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) a.col(c++) = x.col(i).cwiseProduct(x.col(j));
    }
  }
  return a;
}

}  // namespace

MetaModelResult meta_model_features(const SampleDesign& design) {
  const auto n = design.x.rows();
  const auto d = design.x.cols();
  const auto largest = 1 + 2 * d + d * (d - 1) / 2;
  if (n <= largest) {
    throw ConfigError("meta_model_features: n = " + std::to_string(n) +
                      " must exceed the quadratic-interaction coefficient count " +
                      std::to_string(largest));
  }
  const Fit lin = least_squares(model_matrix(design.x, false, false), design.y);
  const Fit lin_int = least_squares(model_matrix(design.x, false, true), design.y);
  const Fit quad = least_squares(model_matrix(design.x, true, false), design.y);
  const Fit quad_int = least_squares(model_matrix(design.x, true, true), design.y);

  constexpr double guard = 1e-12;
  const Vector lin_abs = lin.coef.tail(d).cwiseAbs();
  const Vector quad_abs = quad.coef.tail(d).cwiseAbs();

  MetaModelResult out;
  out.ridge_fallbacks = lin.ridge + lin_int.ridge + quad.ridge + quad_int.ridge;
  out.features = {
      {"ela_meta.lin_simple.adj_r2", lin.adj_r2},
      {"ela_meta.lin_simple.intercept", lin.coef[0]},
      {"ela_meta.lin_simple.coef.min", lin_abs.minCoeff()},
      {"ela_meta.lin_simple.coef.max", lin_abs.maxCoeff()},
      {"ela_meta.lin_simple.coef.max_by_min", lin_abs.maxCoeff() / std::max(lin_abs.minCoeff(), guard)},
      {"ela_meta.lin_w_interact.adj_r2", lin_int.adj_r2},
      {"ela_meta.quad_simple.adj_r2", quad.adj_r2},
      {"ela_meta.quad_simple.cond", quad_abs.maxCoeff() / std::max(quad_abs.minCoeff(), guard)},
      {"ela_meta.quad_w_interact.adj_r2", quad_int.adj_r2},
  };
  return out;
}

}  // namespace aif::ela
