#include <algorithm>
#include <cmath>
#include <limits>

#include "aif/errors.hpp"
#include "aif/stats.hpp"
#include "detail.hpp"

namespace aif::ela {

FeatureList nbc_features(const SampleDesign& design) {
  return detail::nbc_features(design, pairwise_distances(design.x));
}

namespace detail {

FeatureList nbc_features(const SampleDesign& design, const Matrix& distances) {
  const auto n = static_cast<int>(design.y.size());
  if (n < 3) throw ContractViolation("nbc_features needs at least three points");
  constexpr double guard = 1e-12;
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<double> nn(static_cast<std::size_t>(n), inf);
  std::vector<double> nb(static_cast<std::size_t>(n), inf);
  std::vector<int> nb_index(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = distances(i, j);
      if (dij < nn[ui]) nn[ui] = dij;
      if (design.y[j] < design.y[i] && dij < nb[ui]) {
        nb[ui] = dij;
        nb_index[ui] = j;
      }
    }
    // No strictly better point: the nearest-better distance falls back to
    // the nearest-neighbour distance.
    if (nb_index[ui] < 0) nb[ui] = nn[ui];
  }

  std::vector<double> ratio(static_cast<std::size_t>(n));
  std::vector<double> indegree(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    ratio[i] = std::max(nn[i], guard) / std::max(nb[i], guard);
    if (nb_index[i] >= 0) indegree[static_cast<std::size_t>(nb_index[i])] += 1.0;
  }
  const double sd_nn = stats::sd(nn);
  const double sd_nb = stats::sd(nb);
  const double sd_ratio = sd_nb > guard ? sd_nn / sd_nb : 1.0;
  const double mean_ratio = stats::mean(ratio);
  const double coeff_var = stats::sd(ratio) / std::max(mean_ratio, guard);
  std::vector<double> y(design.y.data(), design.y.data() + n);

  return {{"nbc.nn_nb.mean_ratio", mean_ratio},
          {"nbc.nn_nb.sd_ratio", sd_ratio},
          {"nbc.nn_nb.cor", stats::pearson(nn, nb)},
          {"nbc.dist_ratio.coeff_var", coeff_var},
          {"nbc.nb_fitness.cor", stats::pearson(y, indegree)}};
}

}  // namespace detail
}  // namespace aif::ela
