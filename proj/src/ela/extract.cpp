#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/rng.hpp"
#include "detail.hpp"

namespace aif::ela {
namespace {

std::vector<FeatureSpec> build_schema() {
  std::vector<FeatureSpec> s;
  const char* fractions[] = {"02", "05", "10", "25"};
  for (const char* stat : {"ratio_mean", "ratio_median", "diff_mean", "diff_median"}) {
    for (const char* q : fractions) s.push_back({std::string("disp.") + stat + "_" + q, "disp"});
  }
  for (const char* n : {"ic.h_max", "ic.eps_s", "ic.eps_max", "ic.eps_ratio", "ic.m0"}) {
    s.push_back({n, "ic"});
  }
  for (const char* n : {"nbc.nn_nb.mean_ratio", "nbc.nn_nb.sd_ratio", "nbc.nn_nb.cor",
                        "nbc.dist_ratio.coeff_var", "nbc.nb_fitness.cor"}) {
    s.push_back({n, "nbc"});
  }
  for (const char* n :
       {"ela_meta.lin_simple.adj_r2", "ela_meta.lin_simple.intercept",
        "ela_meta.lin_simple.coef.min", "ela_meta.lin_simple.coef.max",
        "ela_meta.lin_simple.coef.max_by_min", "ela_meta.lin_w_interact.adj_r2",
        "ela_meta.quad_simple.adj_r2", "ela_meta.quad_simple.cond",
        "ela_meta.quad_w_interact.adj_r2"}) {
    s.push_back({n, "ela_meta"});
  }
  for (const char* q : {"10", "25", "50"}) {
    for (const char* stat : {"mmce_lda_", "mmce_qda_", "lda_qda_"}) {
      s.push_back({std::string("ela_level.") + stat + q, "ela_level"});
    }
  }
  for (const char* n : {"pca.expl_var.cov_x", "pca.expl_var.cor_x", "pca.expl_var.cov_init",
                        "pca.expl_var.cor_init", "pca.expl_var_PC1.cov_x",
                        "pca.expl_var_PC1.cor_x", "pca.expl_var_PC1.cov_init",
                        "pca.expl_var_PC1.cor_init"}) {
    s.push_back({n, "pca"});
  }
  return s;
}

}  // namespace

const std::vector<FeatureSpec>& schema() {
  static const std::vector<FeatureSpec> s = build_schema();
  return s;
}

ElaFeatureVector extract_from_design(const SampleDesign& design, const InstanceKey& key) {
  const Matrix distances = pairwise_distances(design.x, Execution::serial());
  FeatureList all;
  auto append = [&all](FeatureList part) {
    for (auto& f : part) all.push_back(std::move(f));
  };
  ElaFeatureVector out;
  out.key = key;
  append(detail::disp_features(design, distances));
  append(detail::ic_features(design, distances));
  append(detail::nbc_features(design, distances));
  auto meta = meta_model_features(design);
  out.ridge_fallbacks = meta.ridge_fallbacks;
  append(std::move(meta.features));
  append(level_features(design));
  append(pca_features(design));

  const auto& s = schema();
  if (all.size() != s.size()) throw ContractViolation("feature groups disagree with the schema");
  out.values.resize(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].name != s[i].name) {
      throw ContractViolation("feature '" + all[i].name + "' out of schema order");
    }
    double v = all[i].value;
    if (!std::isfinite(v)) {
      v = 0.0;
      ++out.sanitized;
    }
    out.values[i] = v;
  }
  return out;
}

ElaFeatureVector extract_all(const suite::ProblemInstance& instance, int n, std::uint64_t seed) {
  return extract_from_design(sample_design(instance, n, seed), instance.key());
}

std::uint64_t sample_seed_for(std::uint64_t master_seed, const InstanceKey& key) {
  std::uint64_t s = derive_seed(master_seed, "features");
  s = derive_seed(s, static_cast<std::uint64_t>(key.problem_id));
  s = derive_seed(s, static_cast<std::uint64_t>(key.instance_id));
  return derive_seed(s, static_cast<std::uint64_t>(key.dimension));
}

std::size_t FeatureMatrix::row_of(const InstanceKey& key) const {
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] == key) return i;
  }
  throw ContractViolation("feature matrix has no row for " + to_string(key));
}

std::size_t FeatureMatrix::column_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw ContractViolation("unknown feature '" + name + "'");
}

FeatureMatrix extract_matrix(std::span<const suite::ProblemInstance> instances,
                             int sample_multiplier, std::uint64_t master_seed,
                             const Execution& exec) {
  std::vector<ElaFeatureVector> rows(instances.size());
  parallel_for(instances.size(), exec, [&](std::size_t i) {
    const auto& inst = instances[i];
    rows[i] = extract_all(inst, sample_multiplier * inst.dimension(),
                          sample_seed_for(master_seed, inst.key()));
  });
  FeatureMatrix m;
  for (const auto& f : schema()) m.names.push_back(f.name);
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.keys.push_back(rows[i].key);
    for (std::size_t j = 0; j < rows[i].values.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
    }
    m.sanitized += rows[i].sanitized;
    m.ridge_fallbacks += rows[i].ridge_fallbacks;
  }
  return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  csv::Writer w(out);
  w.field("problem_id").field("instance_id").field("dimension");
  for (const auto& n : m.names) w.field(n);
  w.end_row();
  for (std::size_t i = 0; i < m.keys.size(); ++i) {
    w.field(m.keys[i].problem_id).field(m.keys[i].instance_id).field(m.keys[i].dimension);
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      w.field(m.values(static_cast<Eigen::Index>(i), j));
    }
    w.end_row();
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  const auto t = csv::read(in);
  if (t.header.size() < 3 || t.header[0] != "problem_id" || t.header[1] != "instance_id" ||
      t.header[2] != "dimension") {
    throw ContractViolation("feature csv: unexpected header");
  }
  FeatureMatrix m;
  m.names.assign(t.header.begin() + 3, t.header.end());
  m.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(m.names.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    m.keys.push_back({static_cast<int>(csv::parse_int(row[0])), static_cast<int>(csv::parse_int(row[1])),
                      static_cast<int>(csv::parse_int(row[2]))});
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv::parse_double(row[j + 3]);
    }
  }
  return m;
}

void write_schema_json(std::ostream& out) {
  nlohmann::ordered_json j;
  j["features"] = nlohmann::ordered_json::array();
  for (const auto& f : schema()) j["features"].push_back({{"name", f.name}, {"group", f.group}});
  j["notes"] = {
      {"ela_level.lda_qda_*", "ratio of LDA to QDA cross-validated error, (lda + 1e-12) / (qda + 1e-12)"}};
  out << j.dump(2) << '\n';
}

}  // namespace aif::ela
