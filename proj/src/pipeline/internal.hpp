#pragma once

#include <string>
#include <vector>

#include "aif/pipeline.hpp"

namespace aif::pipeline::detail {

/// Configured DE configs, or the default portfolio when none are given.
std::vector<de::DeConfig> de_configs(const RunConfig& config);

/// model.target, or the first DE config.
std::string target_config(const RunConfig& config);

/// Portfolio sizes with kAllFeatures resolved against `n_features`, sorted
/// and deduplicated.
std::vector<int> portfolio_sizes(const RunConfig& config, int n_features);

int footprint_size(const RunConfig& config, int n_features);

}  // namespace aif::pipeline::detail
