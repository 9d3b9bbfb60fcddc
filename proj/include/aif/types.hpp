#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <string>

namespace aif {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Identifies one problem instance of the suite.
struct InstanceKey {
  int problem_id = 0;
  int instance_id = 0;
  int dimension = 0;

  auto operator<=>(const InstanceKey&) const = default;
};

inline std::string to_string(const InstanceKey& k) {
  return "f" + std::to_string(k.problem_id) + "_i" + std::to_string(k.instance_id) + "_d" +
         std::to_string(k.dimension);
}

}  // namespace aif
