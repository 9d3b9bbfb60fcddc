#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "aif/errors.hpp"
#include "aif/models.hpp"
#include "aif/stats.hpp"

namespace aif::models {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::RandomForest:
      return "random_forest";
    case ModelKind::Knn:
      return "knn";
    case ModelKind::Kernel:
      return "kernel";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::RandomForest, ModelKind::Knn, ModelKind::Kernel}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::string_view display_label(ModelKind kind) {
  switch (kind) {
    case ModelKind::RandomForest:
      return "RF";
    case ModelKind::Knn:
      return "KNN";
    case ModelKind::Kernel:
      return "SVM-surrogate";
  }
  return "?";
}

// --- standardiser --------------------------------------------------------------

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const auto n = x.rows();
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - s.mean[j]).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Vector Standardizer::apply(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(mean.size())) {
    throw ContractViolation("standardizer: expected " + std::to_string(mean.size()) + " features");
  }
  Vector out(mean.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    out[j] = (x[static_cast<std::size_t>(j)] - mean[j]) / scale[j];
  }
  return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.row(i) = apply(std::span<const double>(x.row(i).data(), static_cast<std::size_t>(x.cols()))).transpose();
  }
  return out;
}

// --- knn -------------------------------------------------------------------------

KnnRegressor fit_knn(const Matrix& x, std::span<const double> y, int k_neighbors) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ContractViolation("fit_knn: rows(X) != length(y)");
  }
  if (k_neighbors < 1 || k_neighbors > x.rows()) {
    throw ConfigError("fit_knn: k = " + std::to_string(k_neighbors) + " must lie in 1.." +
                      std::to_string(x.rows()));
  }
  auto s = Standardizer::fit(x);
  Matrix train = s.apply(x);
  Vector targets = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  return KnnRegressor(std::move(s), std::move(train), std::move(targets), k_neighbors);
}

double KnnRegressor::predict(std::span<const double> x) const {
  const Vector q = standardizer_.apply(x);
  const auto n = train_.rows();
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dist[static_cast<std::size_t>(i)] = {(train_.row(i).transpose() - q).squaredNorm(), i};
  }
  const auto k = static_cast<std::size_t>(k_);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += y_[dist[i].second];
  return s / static_cast<double>(k);
}

// --- kernel ridge ------------------------------------------------------------------

namespace {

double rbf(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, double bandwidth) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

}  // namespace

KernelRidge fit_kernel(const Matrix& x, std::span<const double> y, const KernelParams& params) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ContractViolation("fit_kernel: rows(X) != length(y)");
  }
  if (!(params.penalty > 0.0)) throw ConfigError("fit_kernel: ridge penalty must be positive");
  if (params.bandwidth < 0.0) throw ConfigError("fit_kernel: bandwidth must be non-negative");
  auto s = Standardizer::fit(x);
  Matrix train = s.apply(x);
  const auto n = train.rows();

  double bandwidth = params.bandwidth;
  if (bandwidth == 0.0) {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((train.row(i) - train.row(j)).norm());
    }
    bandwidth = d.empty() ? 1.0 : stats::median(d);
    if (!(bandwidth > 0.0)) bandwidth = 1.0;
  }

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      gram(i, j) = rbf(train.row(i).transpose(), train.row(j).transpose(), bandwidth);
    }
  }
  gram.diagonal().array() += params.penalty;
  const Vector yv = Eigen::Map<const Vector>(y.data(), n);
  const double y_mean = yv.mean();
  Vector alpha = gram.ldlt().solve((yv.array() - y_mean).matrix());
  return KernelRidge(std::move(s), std::move(train), std::move(alpha), y_mean, bandwidth);
}

double KernelRidge::predict(std::span<const double> x) const {
  const Vector q = standardizer_.apply(x);
  double s = y_mean_;
  for (Eigen::Index i = 0; i < train_.rows(); ++i) {
    s += alpha_[i] * rbf(train_.row(i).transpose(), q, bandwidth_);
  }
  return s;
}

// --- variant surface -----------------------------------------------------------------

Model fit_model(const ModelSpec& spec, const Matrix& x, std::span<const double> y,
                const Execution& exec) {
  switch (spec.kind) {
    case ModelKind::RandomForest:
      return fit_random_forest(x, y, spec.forest, exec);
    case ModelKind::Knn:
      return fit_knn(x, y, spec.knn_neighbors);
    case ModelKind::Kernel:
      return fit_kernel(x, y, spec.kernel);
  }
  throw ContractViolation("fit_model: unknown kind");
}

ModelKind kind_of(const Model& model) {
  switch (model.index()) {
    case 0:
      return ModelKind::RandomForest;
    case 1:
      return ModelKind::Knn;
    default:
      return ModelKind::Kernel;
  }
}

double predict(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

Vector predict_rows(const Model& model, const Matrix& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = predict(model, {x.row(i).data(), static_cast<std::size_t>(x.cols())});
  }
  return out;
}

ModelMetrics compute_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw ContractViolation("metrics: truth and predictions must be non-empty and equal length");
  }
  const double mean = stats::mean(truth);
  double abs_sum = 0.0, sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = predicted[i] - truth[i];
    abs_sum += std::abs(e);
    sse += e * e;
    sst += (truth[i] - mean) * (truth[i] - mean);
  }
  ModelMetrics m;
  m.mae = abs_sum / static_cast<double>(truth.size());
  if (sst > 0.0) {
    m.r2 = 1.0 - sse / sst;
  } else {
    m.r2 = sse > 0.0 ? 0.0 : 1.0;
  }
  return m;
}

ModelMetrics evaluate_model(const Model& model, const Matrix& x_test, std::span<const double> y_test) {
  const Vector pred = predict_rows(model, x_test);
  return compute_metrics(y_test, {pred.data(), static_cast<std::size_t>(pred.size())});
}

// --- persistence -------------------------------------------------------------------------

namespace {

json vec_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix mat_from_json(const json& j) {
  const auto data = j.at("data").get<std::vector<double>>();
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ContractViolation("model file: matrix size mismatch");
  }
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

json standardizer_to_json(const Standardizer& s) {
  return {{"mean", vec_to_json(s.mean)}, {"scale", vec_to_json(s.scale)}};
}

Standardizer standardizer_from_json(const json& j) {
  return {vec_from_json(j.at("mean")), vec_from_json(j.at("scale"))};
}

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  json j;
  j["kind"] = std::string(to_string(kind_of(model)));
  if (const auto* rf = std::get_if<RandomForest>(&model)) {
    j["n_features"] = rf->n_features();
    json trees = json::array();
    for (const auto& t : rf->trees()) {
      json nodes = json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.cover});
      }
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  } else if (const auto* knn = std::get_if<KnnRegressor>(&model)) {
    j["k"] = knn->k();
    j["standardizer"] = standardizer_to_json(knn->standardizer());
    j["train"] = mat_to_json(knn->train());
    j["targets"] = vec_to_json(knn->targets());
  } else if (const auto* kr = std::get_if<KernelRidge>(&model)) {
    j["report_tag"] = "svm-surrogate";
    j["standardizer"] = standardizer_to_json(kr->standardizer());
    j["train"] = mat_to_json(kr->train());
    j["alpha"] = vec_to_json(kr->alpha());
    j["y_mean"] = kr->y_mean();
    j["bandwidth"] = kr->bandwidth();
  }
  out << j.dump() << '\n';
}

Model load_model(std::istream& in) {
  json j;
  in >> j;
  switch (parse_model_kind(j.at("kind").get<std::string>())) {
    case ModelKind::RandomForest: {
      std::vector<RegressionTree> trees;
      for (const auto& jt : j.at("trees")) {
        RegressionTree t;
        for (const auto& jn : jt) {
          t.nodes.push_back({jn[0].get<int>(), jn[1].get<double>(), jn[2].get<int>(),
                             jn[3].get<int>(), jn[4].get<double>(), jn[5].get<int>()});
        }
        trees.push_back(std::move(t));
      }
      return RandomForest(std::move(trees), j.at("n_features").get<int>());
    }
    case ModelKind::Knn:
      return KnnRegressor(standardizer_from_json(j.at("standardizer")), mat_from_json(j.at("train")),
                          vec_from_json(j.at("targets")), j.at("k").get<int>());
    case ModelKind::Kernel:
      return KernelRidge(standardizer_from_json(j.at("standardizer")), mat_from_json(j.at("train")),
                         vec_from_json(j.at("alpha")), j.at("y_mean").get<double>(),
                         j.at("bandwidth").get<double>());
  }
  throw ContractViolation("model file: unknown kind");
}

}  // namespace aif::models
