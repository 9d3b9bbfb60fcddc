#include <Eigen/Eigenvalues>

#include "aif/errors.hpp"
#include "aif/viz.hpp"

namespace aif::viz {

const std::array<double, 2>& Embedding2D::at(const InstanceKey& key) const {
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] == key) return coords[i];
  }
  throw ContractViolation("embedding has no point for " + to_string(key));
}

Embedding2D PcaEmbedder::embed(const Matrix& rows, std::span<const InstanceKey> keys) const {
  if (rows.rows() < 3) throw ContractViolation("embed_2d: need at least three rows");
  if (static_cast<std::size_t>(rows.rows()) != keys.size()) {
    throw ContractViolation("embed_2d: one key per row required");
  }
  const Eigen::MatrixXd centred = rows.rowwise() - rows.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(rows.rows() - 1);

  Embedding2D out;
  out.method = "pca";
  out.parameters = "components=2";
  out.keys.assign(keys.begin(), keys.end());
  out.coords.assign(keys.size(), {0.0, 0.0});
  if (cov.size() == 0) return out;

  // Eigenvalues come back ascending.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const auto m = cov.cols();
  const double top = eig.eigenvalues()[m - 1];
  for (int c = 0; c < 2 && c < m; ++c) {
    Eigen::VectorXd axis = eig.eigenvectors().col(m - 1 - c);
    // Axes carrying only rounding noise stay at zero.
    if (!(top > 0.0) || eig.eigenvalues()[m - 1 - c] <= 1e-12 * top) break;
    Eigen::Index lead = 0;
    for (Eigen::Index j = 1; j < m; ++j) {
      if (std::abs(axis[j]) > std::abs(axis[lead])) lead = j;
    }
    if (axis[lead] < 0.0) axis = -axis;
    const Eigen::VectorXd proj = centred * axis;
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
      out.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = proj[i];
    }
  }
  return out;
}

Embedding2D embed_2d(const Matrix& rows, std::span<const InstanceKey> keys) {
  return PcaEmbedder().embed(rows, keys);
}

Matrix phi_matrix(std::span<const shap::ShapMetaRepresentation> reps) {
  if (reps.empty()) return {};
  const auto m = static_cast<Eigen::Index>(reps.front().phi.size());
  Matrix out(static_cast<Eigen::Index>(reps.size()), m);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (static_cast<Eigen::Index>(reps[i].phi.size()) != m) {
      throw ContractViolation("phi_matrix: inconsistent attribution width");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      out(static_cast<Eigen::Index>(i), j) = reps[i].phi[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

}  // namespace aif::viz
