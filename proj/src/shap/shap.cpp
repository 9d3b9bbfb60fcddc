#include "aif/shap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/rng.hpp"
#include "aif/stats.hpp"

namespace aif::shap {
namespace {

// weight(a, b) = a! b! / (a + b + 1)!: the Shapley weight of a coalition
// with a members drawn from one side and b from the other.
class WeightTable {
 public:
  WeightTable() {
    fact_[0] = 1.0;
    for (std::size_t i = 1; i < fact_.size(); ++i) fact_[i] = fact_[i - 1] * static_cast<double>(i);
  }
  double operator()(int a, int b) const {
    const auto n = static_cast<std::size_t>(a + b + 1);
    if (n >= fact_.size()) throw ContractViolation("tree_shap: path has too many distinct features");
    return fact_[static_cast<std::size_t>(a)] * fact_[static_cast<std::size_t>(b)] / fact_[n];
  }

 private:
  std::array<double, 171> fact_{};
};

const WeightTable kWeights;

enum class Side : unsigned char { None, X, Z };

struct TreeWalker {
  const models::RegressionTree& tree;
  std::span<const double> x;
  std::span<const double> z;
  std::vector<double>& phi;
  std::vector<Side> side;
  std::vector<int> x_set;
  std::vector<int> z_set;

  void walk(int id) {
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.feature < 0) {
      const int a = static_cast<int>(x_set.size());
      const int b = static_cast<int>(z_set.size());
      if (a > 0) {
        const double w = kWeights(a - 1, b) * node.value;
        for (int f : x_set) phi[static_cast<std::size_t>(f)] += w;
      }
      if (b > 0) {
        const double w = kWeights(a, b - 1) * node.value;
        for (int f : z_set) phi[static_cast<std::size_t>(f)] -= w;
      }
      return;
    }
    const auto f = static_cast<std::size_t>(node.feature);
    const int x_child = x[f] <= node.threshold ? node.left : node.right;
    const int z_child = z[f] <= node.threshold ? node.left : node.right;
    switch (side[f]) {
      case Side::X:
        walk(x_child);
        return;
      case Side::Z:
        walk(z_child);
        return;
      case Side::None:
        break;
    }
    if (x_child == z_child) {
      walk(x_child);
      return;
    }
    side[f] = Side::X;
    x_set.push_back(node.feature);
    walk(x_child);
    x_set.pop_back();
    side[f] = Side::Z;
    z_set.push_back(node.feature);
    walk(z_child);
    z_set.pop_back();
    side[f] = Side::None;
  }
};

void check_width(std::size_t expected, Eigen::Index got, const char* what) {
  if (static_cast<std::size_t>(got) != expected) {
    throw ContractViolation(std::string(what) + ": expected " + std::to_string(expected) +
                            " features, got " + std::to_string(got));
  }
}

std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

std::vector<double> tree_shap_single(const models::RegressionTree& tree, std::span<const double> x,
                                     std::span<const double> z) {
  if (x.size() != z.size()) throw ContractViolation("tree_shap: x and background widths differ");
  std::vector<double> phi(x.size(), 0.0);
  TreeWalker w{tree, x, z, phi, std::vector<Side>(x.size(), Side::None), {}, {}};
  w.walk(0);
  return phi;
}

ShapMetaRepresentation tree_shap(const models::RandomForest& forest, std::span<const double> x,
                                 const Matrix& background) {
  const auto m = static_cast<std::size_t>(forest.n_features());
  if (x.size() != m) throw ContractViolation("tree_shap: input width mismatch");
  if (background.rows() == 0) throw ContractViolation("tree_shap: empty background");
  check_width(m, background.cols(), "tree_shap background");

  ShapMetaRepresentation rep;
  rep.phi.assign(m, 0.0);
  std::vector<double> phi(m);
  double base = 0.0;
  for (Eigen::Index b = 0; b < background.rows(); ++b) {
    const auto z = row_span(background, b);
    for (const auto& tree : forest.trees()) {
      std::fill(phi.begin(), phi.end(), 0.0);
      TreeWalker w{tree, x, z, phi, std::vector<Side>(m, Side::None), {}, {}};
      w.walk(0);
      for (std::size_t j = 0; j < m; ++j) rep.phi[j] += phi[j];
    }
    base += forest.predict(z);
  }
  const double scale =
      1.0 / (static_cast<double>(background.rows()) * static_cast<double>(forest.trees().size()));
  for (double& v : rep.phi) v *= scale;
  rep.base_value = base / static_cast<double>(background.rows());
  rep.prediction = forest.predict(x);
  return rep;
}

ShapMetaRepresentation sampling_shap(const models::Model& model, std::span<const double> x,
                                     const Matrix& background, int n_permutations,
                                     std::uint64_t seed) {
  if (n_permutations < 1) throw ContractViolation("sampling_shap: n_permutations must be >= 1");
  if (background.rows() == 0) throw ContractViolation("sampling_shap: empty background");
  const std::size_t m = x.size();
  check_width(m, background.cols(), "sampling_shap background");

  const auto n_bg = static_cast<std::size_t>(background.rows());
  std::size_t pairs = (static_cast<std::size_t>(n_permutations) + 1) / 2;
  pairs = (pairs + n_bg - 1) / n_bg * n_bg;

  Rng rng(seed);
  std::vector<std::size_t> bg_order(n_bg);
  std::iota(bg_order.begin(), bg_order.end(), 0);
  rng.shuffle(std::span<std::size_t>(bg_order));

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> pair_sum(m), total(m, 0.0), total_sq(m, 0.0);
  std::vector<double> h(m);

  auto accumulate = [&](std::span<const double> z, auto first, auto last) {
    std::copy(z.begin(), z.end(), h.begin());
    double prev = models::predict(model, h);
    for (auto it = first; it != last; ++it) {
      h[*it] = x[*it];
      const double cur = models::predict(model, h);
      pair_sum[*it] += cur - prev;
      prev = cur;
    }
  };

  for (std::size_t p = 0; p < pairs; ++p) {
    rng.shuffle(std::span<std::size_t>(perm));
    const auto z = row_span(background, static_cast<Eigen::Index>(bg_order[p % n_bg]));
    std::fill(pair_sum.begin(), pair_sum.end(), 0.0);
    accumulate(z, perm.begin(), perm.end());
    accumulate(z, perm.rbegin(), perm.rend());
    for (std::size_t j = 0; j < m; ++j) {
      const double d = 0.5 * pair_sum[j];
      total[j] += d;
      total_sq[j] += d * d;
    }
  }

  ShapMetaRepresentation rep;
  rep.phi.resize(m);
  rep.standard_error.resize(m);
  const double n = static_cast<double>(pairs);
  for (std::size_t j = 0; j < m; ++j) {
    rep.phi[j] = total[j] / n;
    if (pairs > 1) {
      const double var = std::max(0.0, (total_sq[j] - n * rep.phi[j] * rep.phi[j]) / (n - 1.0));
      rep.standard_error[j] = std::sqrt(var / n);
    }
  }
  double base = 0.0;
  for (Eigen::Index b = 0; b < background.rows(); ++b) {
    base += models::predict(model, row_span(background, b));
  }
  rep.base_value = base / static_cast<double>(background.rows());
  rep.prediction = models::predict(model, x);
  return rep;
}

std::vector<ShapMetaRepresentation> explain_rows(const models::Model& model, const Matrix& x,
                                                 std::span<const InstanceKey> keys,
                                                 const Matrix& background,
                                                 const ExplainParams& params,
                                                 const Execution& exec) {
  if (keys.size() != static_cast<std::size_t>(x.rows())) {
    throw ContractViolation("explain_rows: one key per row required");
  }
  std::vector<ShapMetaRepresentation> out(keys.size());
  const auto* forest = std::get_if<models::RandomForest>(&model);
  Matrix sampled;
  const Matrix* bg = &background;
  if (!forest && params.max_background > 0 && background.rows() > params.max_background) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(background.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(derive_seed(params.seed, "background"));
    rng.shuffle(std::span<Eigen::Index>(rows));
    rows.resize(static_cast<std::size_t>(params.max_background));
    std::sort(rows.begin(), rows.end());
    sampled.resize(params.max_background, background.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      sampled.row(static_cast<Eigen::Index>(i)) = background.row(rows[i]);
    }
    bg = &sampled;
  }
  parallel_for(keys.size(), exec, [&](std::size_t i) {
    const auto row = row_span(x, static_cast<Eigen::Index>(i));
    if (forest) {
      out[i] = tree_shap(*forest, row, background);
    } else {
      out[i] = sampling_shap(model, row, *bg, params.n_permutations,
                             derive_seed(params.seed, to_string(keys[i])));
    }
    out[i].key = keys[i];
  });
  return out;
}

std::vector<FeatureImportance> global_importance(std::span<const ShapMetaRepresentation> reps,
                                                 std::span<const std::string> names) {
  if (reps.empty()) throw ContractViolation("global_importance: no attributions");
  std::vector<FeatureImportance> out(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) out[j].name = names[j];
  for (const auto& r : reps) {
    if (r.phi.size() != names.size()) {
      throw ContractViolation("global_importance: attribution width differs from feature names");
    }
    for (std::size_t j = 0; j < names.size(); ++j) out[j].importance += std::abs(r.phi[j]);
  }
  for (auto& f : out) f.importance /= static_cast<double>(reps.size());
  std::sort(out.begin(), out.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.name < b.name;
  });
  return out;
}

FeaturePortfolio select_portfolio(const Matrix& train_x, std::span<const double> train_y,
                                  std::span<const std::string> names, int k,
                                  const models::ModelSpec& spec, const ExplainParams& params,
                                  const Execution& exec) {
  if (k <= 0) throw ConfigError("portfolio size must be positive");
  if (static_cast<std::size_t>(k) > names.size()) {
    throw ConfigError("portfolio size " + std::to_string(k) + " exceeds the " +
                      std::to_string(names.size()) + " available features");
  }
  check_width(names.size(), train_x.cols(), "select_portfolio");
  const auto model = models::fit_model(spec, train_x, train_y, exec);
  std::vector<InstanceKey> keys(static_cast<std::size_t>(train_x.rows()));
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i].instance_id = static_cast<int>(i);
  const auto reps = explain_rows(model, train_x, keys, train_x, params, exec);
  const auto ranking = global_importance(reps, names);

  FeaturePortfolio p;
  p.source = spec.kind;
  for (int i = 0; i < k; ++i) {
    p.feature_names.push_back(ranking[static_cast<std::size_t>(i)].name);
    p.importance.push_back(ranking[static_cast<std::size_t>(i)].importance);
  }
  return p;
}

std::vector<int> portfolio_columns(const FeaturePortfolio& portfolio,
                                   std::span<const std::string> names) {
  std::vector<int> cols;
  for (const auto& f : portfolio.feature_names) {
    const auto it = std::find(names.begin(), names.end(), f);
    if (it == names.end()) throw ContractViolation("portfolio feature not in schema: " + f);
    cols.push_back(static_cast<int>(it - names.begin()));
  }
  return cols;
}

void write_meta_csv(std::ostream& out, std::span<const ShapMetaRepresentation> reps,
                    std::span<const std::string> names) {
  csv::Writer w(out);
  w.field("problem_id").field("instance_id").field("dimension").field("base_value").field(
      "prediction");
  for (const auto& n : names) w.field(n);
  w.end_row();
  for (const auto& r : reps) {
    if (r.phi.size() != names.size()) throw ContractViolation("write_meta_csv: width mismatch");
    w.field(r.key.problem_id).field(r.key.instance_id).field(r.key.dimension);
    w.field(r.base_value).field(r.prediction);
    for (double v : r.phi) w.field(v);
    w.end_row();
  }
}

std::vector<ShapMetaRepresentation> read_meta_csv(std::istream& in, std::vector<std::string>* names) {
  const auto t = csv::read(in);
  constexpr std::size_t kLead = 5;
  if (t.header.size() < kLead) throw ContractViolation("meta csv: missing columns");
  if (names) names->assign(t.header.begin() + kLead, t.header.end());
  std::vector<ShapMetaRepresentation> out;
  for (const auto& row : t.rows) {
    ShapMetaRepresentation r;
    r.key = {static_cast<int>(csv::parse_int(row[0])), static_cast<int>(csv::parse_int(row[1])),
             static_cast<int>(csv::parse_int(row[2]))};
    r.base_value = csv::parse_double(row[3]);
    r.prediction = csv::parse_double(row[4]);
    for (std::size_t j = kLead; j < row.size(); ++j) r.phi.push_back(csv::parse_double(row[j]));
    out.push_back(std::move(r));
  }
  return out;
}

void write_portfolio_json(std::ostream& out, const FeaturePortfolio& portfolio) {
  nlohmann::json j;
  j["model_kind"] = std::string(models::to_string(portfolio.source));
  j["size"] = portfolio.size();
  auto& features = j["features"] = nlohmann::json::array();
  for (int i = 0; i < portfolio.size(); ++i) {
    features.push_back({{"name", portfolio.feature_names[static_cast<std::size_t>(i)]},
                        {"importance", portfolio.importance[static_cast<std::size_t>(i)]}});
  }
  out << j.dump(2) << '\n';
}

FeaturePortfolio read_portfolio_json(std::istream& in) {
  nlohmann::json j;
  in >> j;
  FeaturePortfolio p;
  p.source = models::parse_model_kind(j.at("model_kind").get<std::string>());
  for (const auto& f : j.at("features")) {
    p.feature_names.push_back(f.at("name").get<std::string>());
    p.importance.push_back(f.at("importance").get<double>());
  }
  return p;
}

}  // namespace aif::shap
