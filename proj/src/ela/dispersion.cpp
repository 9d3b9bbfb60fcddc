#include <algorithm>
#include <cmath>

#include "aif/errors.hpp"
#include "aif/stats.hpp"
#include "detail.hpp"

namespace aif::ela {
namespace {

constexpr double kFractions[] = {0.02, 0.05, 0.10, 0.25};

struct PairSummary {
  double mean = 0.0;
  double median = 0.0;
};

PairSummary summarize_pairs(const Matrix& distances, std::span<const int> subset) {
  std::vector<double> d;
  d.reserve(subset.size() * (subset.size() - 1) / 2);
  for (std::size_t a = 0; a < subset.size(); ++a) {
    for (std::size_t b = a + 1; b < subset.size(); ++b) d.push_back(distances(subset[a], subset[b]));
  }
  const double mean = stats::mean(d);
  const std::size_t k = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  double median = d[k];
  if (d.size() % 2 == 0) median = 0.5 * (median + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k)));
  return {mean, median};
}

PairSummary summarize_all(const Matrix& distances) {
  std::vector<int> all(static_cast<std::size_t>(distances.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return summarize_pairs(distances, all);
}

Dispersion dispersion_with(const SampleDesign& design, const Matrix& distances,
                           const PairSummary& full, double fraction) {
  const auto n = static_cast<std::size_t>(design.y.size());
  if (n < 2) throw ContractViolation("dispersion needs at least two points");
  const auto order = detail::rank_order(design.y);
  const auto m = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9)), 2, n);
  std::vector<int> best(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(best.begin(), best.end());
  const auto sub = summarize_pairs(distances, best);
  constexpr double guard = 1e-12;
  return {sub.mean / std::max(full.mean, guard), sub.mean - full.mean,
          sub.median / std::max(full.median, guard), sub.median - full.median};
}

}  // namespace

Dispersion dispersion_at(const SampleDesign& design, double fraction) {
  const Matrix distances = pairwise_distances(design.x);
  return dispersion_with(design, distances, summarize_all(distances), fraction);
}

FeatureList disp_features(const SampleDesign& design) {
  return detail::disp_features(design, pairwise_distances(design.x));
}

namespace detail {

FeatureList disp_features(const SampleDesign& design, const Matrix& distances) {
  if (design.y.size() < 2) throw ContractViolation("dispersion needs at least two points");
  const auto full = summarize_all(distances);
  std::vector<Dispersion> values;
  for (double q : kFractions) values.push_back(dispersion_with(design, distances, full, q));
  FeatureList out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"disp.ratio_mean_" + percent_tag(kFractions[i]), values[i].ratio_mean});
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"disp.ratio_median_" + percent_tag(kFractions[i]), values[i].ratio_median});
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"disp.diff_mean_" + percent_tag(kFractions[i]), values[i].diff_mean});
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"disp.diff_median_" + percent_tag(kFractions[i]), values[i].diff_median});
  }
  return out;
}

}  // namespace detail
}  // namespace aif::ela
