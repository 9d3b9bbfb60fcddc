#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "aif/models.hpp"
#include "aif/rng.hpp"
#include "aif/types.hpp"

namespace aif::testing {

// --- Shapley oracle ------------------------------------------------------------------

/// Exact Shapley values of the interventional game
///   v(S) = mean_z f(x_S, z_{not S})
/// by enumerating all 2^M coalitions.
inline std::vector<double> brute_force_shapley(
    const std::function<double(std::span<const double>)>& f, std::span<const double> x,
    const Matrix& background) {
  const auto m = static_cast<int>(x.size());
  const std::size_t n_coalitions = std::size_t{1} << m;
  std::vector<double> value(n_coalitions, 0.0);
  std::vector<double> h(x.size());
  for (std::size_t s = 0; s < n_coalitions; ++s) {
    double sum = 0.0;
    for (Eigen::Index b = 0; b < background.rows(); ++b) {
      for (int j = 0; j < m; ++j) h[static_cast<std::size_t>(j)] = (s >> j) & 1U ? x[static_cast<std::size_t>(j)] : background(b, j);
      sum += f(h);
    }
    value[s] = sum / static_cast<double>(background.rows());
  }
  std::vector<double> fact(static_cast<std::size_t>(m) + 1, 1.0);
  for (int i = 1; i <= m; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;

  std::vector<double> phi(x.size(), 0.0);
  for (int i = 0; i < m; ++i) {
    for (std::size_t s = 0; s < n_coalitions; ++s) {
      if ((s >> i) & 1U) continue;
      const int size = __builtin_popcountll(s);
      const double w = fact[static_cast<std::size_t>(size)] * fact[static_cast<std::size_t>(m - size - 1)] /
                       fact[static_cast<std::size_t>(m)];
      phi[static_cast<std::size_t>(i)] += w * (value[s | (std::size_t{1} << i)] - value[s]);
    }
  }
  return phi;
}

// --- tree fixtures ---------------------------------------------------------------------

/// Full random tree of the given depth; features may repeat along a path.
inline models::RegressionTree random_tree(Rng& rng, int depth, int n_features) {
  models::RegressionTree tree;
  std::function<int(int)> grow = [&](int level) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (level == depth) {
      tree.nodes[static_cast<std::size_t>(id)].value = rng.uniform(-5.0, 5.0);
      tree.nodes[static_cast<std::size_t>(id)].cover = 1;
      return id;
    }
    const int feature = static_cast<int>(rng.index(static_cast<std::size_t>(n_features)));
    const double threshold = rng.uniform(-1.0, 1.0);
    const int left = grow(level + 1);
    const int right = grow(level + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
  };
  grow(0);
  return tree;
}

inline Matrix random_matrix(Rng& rng, int rows, int cols, double lo = -1.5, double hi = 1.5) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

inline std::span<const double> row(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

// --- files -----------------------------------------------------------------------------

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("aif_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace aif::testing
