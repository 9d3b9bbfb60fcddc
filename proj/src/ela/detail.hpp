#pragma once

#include <string>
#include <vector>

#include "aif/ela.hpp"

namespace aif::ela::detail {

FeatureList disp_features(const SampleDesign& design, const Matrix& distances);
FeatureList ic_features(const SampleDesign& design, const Matrix& distances);
FeatureList nbc_features(const SampleDesign& design, const Matrix& distances);

/// Indices sorted by (y, index).
std::vector<int> rank_order(const Vector& y);

/// Two-digit percentage suffix: 0.05 -> "05".
std::string percent_tag(double fraction);

}  // namespace aif::ela::detail
