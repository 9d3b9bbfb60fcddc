#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "aif/errors.hpp"
#include "detail.hpp"

namespace aif::ela {
namespace {

constexpr int kEpsGridSize = 30;
constexpr double kEpsMin = 1e-5;
constexpr double kSettlingEntropy = 0.05;

}  // namespace

std::vector<int> nearest_neighbor_tour(const Matrix& distances) {
  const auto n = static_cast<int>(distances.rows());
  std::vector<int> tour;
  if (n == 0) return tour;
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  tour.reserve(static_cast<std::size_t>(n));
  int current = 0;
  visited[0] = 1;
  tour.push_back(0);
  for (int step = 1; step < n; ++step) {
    int next = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (!visited[static_cast<std::size_t>(j)] && distances(current, j) < best) {
        best = distances(current, j);
        next = j;
      }
    }
    visited[static_cast<std::size_t>(next)] = 1;
    tour.push_back(next);
    current = next;
  }
  return tour;
}

std::vector<int> ic_symbols(std::span<const double> diffs, double eps) {
  std::vector<int> out(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    out[i] = diffs[i] > eps ? 1 : (diffs[i] < -eps ? -1 : 0);
  }
  return out;
}

double ic_entropy(std::span<const int> symbols) {
  if (symbols.size() < 2) return 0.0;
  std::array<std::array<int, 3>, 3> counts{};
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
    ++counts[static_cast<std::size_t>(symbols[i] + 1)][static_cast<std::size_t>(symbols[i + 1] + 1)];
  }
  const double total = static_cast<double>(symbols.size() - 1);
  double h = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      if (a == b || counts[a][b] == 0) continue;
      const double p = counts[a][b] / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double ic_partial_information(std::span<const int> symbols) {
  if (symbols.empty()) return 0.0;
  int last = 0;
  std::size_t mu = 0;
  for (int s : symbols) {
    if (s != 0 && s != last) {
      ++mu;
      last = s;
    }
  }
  return static_cast<double>(mu) / static_cast<double>(symbols.size());
}

FeatureList ic_features(const SampleDesign& design) {
  return detail::ic_features(design, pairwise_distances(design.x));
}

namespace detail {

FeatureList ic_features(const SampleDesign& design, const Matrix& distances) {
  if (design.y.size() < 3) throw ContractViolation("ic_features needs at least three points");
  const auto tour = nearest_neighbor_tour(distances);
  std::vector<double> diffs(tour.size() - 1);
  double max_abs = 0.0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    diffs[i] = design.y[tour[i + 1]] - design.y[tour[i]];
    max_abs = std::max(max_abs, std::abs(diffs[i]));
  }

  // eps = 0 followed by a log-spaced grid from 1e-5 to the largest difference.
  std::vector<double> grid{0.0};
  const double hi = std::max(max_abs, kEpsMin);
  const double lo_log = std::log10(kEpsMin);
  const double hi_log = std::log10(hi);
  for (int k = 0; k < kEpsGridSize; ++k) {
    grid.push_back(std::pow(10.0, lo_log + (hi_log - lo_log) * k / (kEpsGridSize - 1)));
  }

  double h_max = -1.0;
  double eps_max = 0.0;
  double eps_s = grid.back();
  bool settled = false;
  for (double eps : grid) {
    const double h = ic_entropy(ic_symbols(diffs, eps));
    if (h > h_max) {
      h_max = h;
      eps_max = eps;
    }
    if (!settled && h < kSettlingEntropy) {
      eps_s = eps;
      settled = true;
    }
  }
  const double eps_ratio = std::log10(std::max(eps_max, kEpsMin) / std::max(eps_s, kEpsMin));
  const double m0 = ic_partial_information(ic_symbols(diffs, 0.0));
  return {{"ic.h_max", h_max},
          {"ic.eps_s", eps_s},
          {"ic.eps_max", eps_max},
          {"ic.eps_ratio", eps_ratio},
          {"ic.m0", m0}};
}

}  // namespace detail
}  // namespace aif::ela
