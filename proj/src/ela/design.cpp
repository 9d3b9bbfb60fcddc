#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aif/errors.hpp"
#include "aif/rng.hpp"
#include "detail.hpp"

namespace aif::ela {

Matrix latin_hypercube(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ConfigError("latin_hypercube: n and d must be positive");
  Rng rng(seed);
  Matrix x(n, d);
  std::vector<int> strata(static_cast<std::size_t>(n));
  const double width = (suite::kUpperBound - suite::kLowerBound) / n;
  for (int j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    rng.shuffle(std::span<int>(strata));
    for (int i = 0; i < n; ++i) {
      x(i, j) = suite::kLowerBound + width * (strata[static_cast<std::size_t>(i)] + rng.uniform());
    }
  }
  return x;
}

SampleDesign sample_design(const suite::ProblemInstance& instance, int n, std::uint64_t seed) {
  const int d = instance.dimension();
  if (n < 10 * d) {
    throw ConfigError("sample_design: n = " + std::to_string(n) + " below 10 * D = " +
                      std::to_string(10 * d));
  }
  SampleDesign design;
  design.seed = seed;
  design.x = latin_hypercube(n, d, seed);
  design.y.resize(n);
  for (int i = 0; i < n; ++i) {
    design.y[i] = instance.evaluate({design.x.row(i).data(), static_cast<std::size_t>(d)});
  }
  return design;
}

SampleDesign make_design(Matrix x, Vector y) {
  if (x.rows() != y.size()) throw ContractViolation("make_design: row count mismatch");
  return {std::move(x), std::move(y), 0};
}

namespace {

double distance(const Matrix& x, Eigen::Index i, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double e = x(i, k) - x(j, k);
    s += e * e;
  }
  return std::sqrt(s);
}

}  // namespace

Matrix pairwise_distances_serial(const Matrix& x) {
  const auto n = x.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(i, j) = out(j, i) = distance(x, i, j);
    }
  }
  return out;
}

Matrix pairwise_distances(const Matrix& x, const Execution& exec) {
  if (!exec.parallel) return pairwise_distances_serial(x);
  const auto n = x.rows();
  Matrix out = Matrix::Zero(n, n);
#ifdef _OPENMP
  const int threads = exec.threads > 0 ? exec.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
#endif
  // Row i owns pairs (i, j > i); no two threads write the same cell.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(i, j) = out(j, i) = distance(x, i, j);
    }
  }
  return out;
}

namespace detail {

std::vector<int> rank_order(const Vector& y) {
  std::vector<int> order(static_cast<std::size_t>(y.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] < y[b]; });
  return order;
}

std::string percent_tag(double fraction) {
  const int pct = static_cast<int>(std::lround(fraction * 100.0));
  return pct < 10 ? "0" + std::to_string(pct) : std::to_string(pct);
}

}  // namespace detail
}  // namespace aif::ela
