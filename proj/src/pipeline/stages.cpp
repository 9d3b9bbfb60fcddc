#include "pipeline/stages.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "aif/csv.hpp"
#include "aif/de.hpp"
#include "aif/ela.hpp"
#include "aif/errors.hpp"
#include "aif/footprint.hpp"
#include "aif/models.hpp"
#include "aif/rng.hpp"
#include "aif/shap.hpp"
#include "aif/suite.hpp"
#include "aif/viz.hpp"
#include "pipeline/internal.hpp"

namespace aif::pipeline {

namespace fs = std::filesystem;

// --- artifact names ---------------------------------------------------------------

std::string fold_train_targets_file(int fold_id) {
  return "folds/fold" + std::to_string(fold_id) + "_train_targets.csv";
}
std::string ranking_file(models::ModelKind kind, int fold_id) {
  return "train/" + std::string(models::to_string(kind)) + "_fold" + std::to_string(fold_id) +
         "_ranking.json";
}
std::string portfolio_file(models::ModelKind kind, int fold_id) {
  return "train/" + std::string(models::to_string(kind)) + "_fold" + std::to_string(fold_id) +
         "_portfolio.json";
}
std::string model_file(models::ModelKind kind, int fold_id) {
  return "train/" + std::string(models::to_string(kind)) + "_fold" + std::to_string(fold_id) +
         "_model.json";
}
std::string predictions_file(models::ModelKind kind, int fold_id) {
  return "predictions/" + std::string(models::to_string(kind)) + "_fold" +
         std::to_string(fold_id) + ".csv";
}
std::string meta_file(models::ModelKind kind, int fold_id) {
  return "explain/" + std::string(models::to_string(kind)) + "_fold" + std::to_string(fold_id) +
         ".csv";
}

namespace {

std::string p_tag(double p) { return "p" + csv::format_double(p); }
std::string sensitivity_assignments_file(double p) {
  return "sensitivity/assignments_" + p_tag(p) + ".csv";
}
std::string transitions_file(double p) { return "sensitivity/transitions_" + p_tag(p) + ".csv"; }
std::string figure_stem(models::ModelKind kind, int fold_id) {
  return std::string(models::to_string(kind)) + "_fold" + std::to_string(fold_id);
}

std::vector<int> fold_ids(const RunConfig& c) {
  std::vector<int> ids;
  for (int f = 1; f <= c.k_folds; ++f) ids.push_back(f);
  return ids;
}

int schema_width() { return static_cast<int>(ela::schema().size()); }

}  // namespace

std::vector<std::string> stage_inputs(const RunConfig& c, Stage stage) {
  std::vector<std::string> in;
  switch (stage) {
    case Stage::Suite:
      break;
    case Stage::Solve:
    case Stage::Features:
      in = {"suite.csv"};
      break;
    case Stage::Folds:
      in = {"suite.csv", "performance.csv"};
      break;
    case Stage::Train:
      in = {"features.csv", "folds.csv"};
      for (int f : fold_ids(c)) in.push_back(fold_train_targets_file(f));
      break;
    case Stage::Explain:
      in = {"features.csv", "folds.csv"};
      for (auto k : c.model_kinds) {
        for (int f : fold_ids(c)) {
          in.push_back(model_file(k, f));
          in.push_back(portfolio_file(k, f));
        }
      }
      break;
    case Stage::Footprint:
      in = {"performance.csv", "folds.csv"};
      for (auto k : c.model_kinds) {
        for (int f : fold_ids(c)) in.push_back(predictions_file(k, f));
      }
      break;
    case Stage::Report:
      in = {"features.csv", "assignments.csv"};
      for (auto k : c.model_kinds) {
        for (int f : fold_ids(c)) {
          in.push_back(portfolio_file(k, f));
          in.push_back(meta_file(k, f));
        }
      }
      break;
  }
  return in;
}

std::vector<std::string> stage_outputs(const RunConfig& c, Stage stage) {
  std::vector<std::string> out;
  switch (stage) {
    case Stage::Suite:
      out = {"suite.csv"};
      break;
    case Stage::Solve:
      out = {"performance.csv"};
      break;
    case Stage::Features:
      out = {"features.csv", "feature_schema.json"};
      break;
    case Stage::Folds:
      out = {"folds.csv"};
      for (int f : fold_ids(c)) out.push_back(fold_train_targets_file(f));
      break;
    case Stage::Train:
      for (auto k : c.model_kinds) {
        for (int f : fold_ids(c)) {
          out.push_back(ranking_file(k, f));
          out.push_back(portfolio_file(k, f));
          out.push_back(model_file(k, f));
          out.push_back(predictions_file(k, f));
        }
      }
      break;
    case Stage::Explain:
      for (auto k : c.model_kinds) {
        for (int f : fold_ids(c)) out.push_back(meta_file(k, f));
      }
      break;
    case Stage::Footprint:
      out = {"assignments.csv", "metrics.csv", "thresholds.csv"};
      for (double p : c.sensitivity_p) {
        out.push_back(sensitivity_assignments_file(p));
        out.push_back(transitions_file(p));
      }
      break;
    case Stage::Report:
      out = {"report/distribution_table.txt", "report/distribution_table.csv",
             "report/distribution_table.tex"};
      for (auto k : c.model_kinds) {
        for (int f : fold_ids(c)) {
          const auto stem = figure_stem(k, f);
          out.push_back("figures/footprint_" + stem + ".svg");
          out.push_back("figures/beeswarm_" + stem + ".svg");
          out.push_back("figures/beeswarm_" + stem + ".csv");
          out.push_back("figures/feature_" + stem + "_rank1.svg");
          out.push_back("figures/feature_" + stem + "_rank2.svg");
        }
      }
      break;
  }
  return out;
}

namespace detail {
namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot read " + path.string());
  return in;
}

/// Writes through a temporary file so a crash never leaves a truncated artifact.
template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ContractViolation("cannot write " + tmp.string());
    fn(out);
    out.flush();
    if (!out) throw ContractViolation("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, [&](std::ostream& o) { o << text; });
}

std::vector<suite::ProblemInstance> load_instances(const fs::path& out) {
  auto in = open_in(out / "suite.csv");
  std::vector<suite::ProblemInstance> instances;
  for (const auto& k : suite::read_manifest_keys(in)) {
    instances.emplace_back(k.problem_id, k.instance_id, k.dimension);
  }
  return instances;
}

ela::FeatureMatrix load_features(const fs::path& out) {
  auto in = open_in(out / "features.csv");
  return ela::read_feature_csv(in);
}

std::vector<models::FoldSplit> load_folds(const fs::path& out) {
  auto in = open_in(out / "folds.csv");
  return models::read_folds_csv(in);
}

std::vector<de::PerformanceRecord> load_performance(const fs::path& path) {
  auto in = open_in(path);
  return de::read_performance_csv(in);
}

std::map<InstanceKey, double> target_values(std::span<const de::PerformanceRecord> records,
                                            const std::string& config_id) {
  std::map<InstanceKey, double> out;
  for (const auto& r : records) {
    if (r.config_id == config_id) out[r.key] = r.median_log_precision;
  }
  return out;
}

Matrix select(const ela::FeatureMatrix& fm, std::span<const InstanceKey> keys,
              std::span<const int> cols) {
  Matrix m(static_cast<Eigen::Index>(keys.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(fm.row_of(keys[i]));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fm.values(r, cols[j]);
    }
  }
  return m;
}

std::vector<int> all_columns(const ela::FeatureMatrix& fm) {
  std::vector<int> cols(fm.names.size());
  std::iota(cols.begin(), cols.end(), 0);
  return cols;
}

const models::FoldSplit& fold_by_id(const std::vector<models::FoldSplit>& folds, int id) {
  for (const auto& f : folds) {
    if (f.fold_id == id) return f;
  }
  throw ContractViolation("folds.csv has no fold " + std::to_string(id));
}

std::string seed_tag(models::ModelKind kind, int fold_id) {
  return std::string(models::to_string(kind)) + "/fold" + std::to_string(fold_id);
}

// --- stages ---------------------------------------------------------------------------

void stage_suite(const RunConfig& c, const fs::path& out) {
  const auto instances = suite::make_suite(c.suite);
  write_file(out / "suite.csv", [&](std::ostream& o) { suite::write_manifest(o, instances); });
}

void stage_solve(const RunConfig& c, const fs::path& out, const Execution& exec,
                 nlohmann::json& info) {
  const auto instances = load_instances(out);
  const auto configs = de_configs(c);
  const int budget = c.budget_multiplier * c.suite.dimension;
  const auto seed = derive_seed(c.master_seed, "solve");
  info["seed"] = seed;
  info["budget"] = budget;
  const auto records = de::measure_portfolio(instances, configs, budget, c.n_runs, seed, exec);
  write_file(out / "performance.csv", [&](std::ostream& o) { de::write_performance_csv(o, records); });
}

void stage_features(const RunConfig& c, const fs::path& out, const Execution& exec,
                    nlohmann::json& info) {
  const auto instances = load_instances(out);
  const auto seed = derive_seed(c.master_seed, "features");
  const auto fm = ela::extract_matrix(instances, c.sample_multiplier, seed, exec);
  info["seed"] = seed;
  info["sanitized_values"] = fm.sanitized;
  info["ridge_fallbacks"] = fm.ridge_fallbacks;
  write_file(out / "features.csv", [&](std::ostream& o) { ela::write_feature_csv(o, fm); });
  write_file(out / "feature_schema.json", [&](std::ostream& o) { ela::write_schema_json(o); });
}

void stage_folds(const RunConfig& c, const fs::path& out, nlohmann::json& info) {
  const auto instances = load_instances(out);
  std::vector<InstanceKey> keys;
  for (const auto& inst : instances) keys.push_back(inst.key());
  const auto seed = derive_seed(c.master_seed, "folds");
  info["seed"] = seed;
  const auto folds = models::make_folds(keys, c.k_folds, seed);
  write_file(out / "folds.csv", [&](std::ostream& o) { models::write_folds_csv(o, folds); });

  // Training targets are split out here so later stages never need to open
  // the full performance table before evaluation.
  const auto records = load_performance(out / "performance.csv");
  const auto target = target_config(c);
  std::map<InstanceKey, const de::PerformanceRecord*> by_key;
  for (const auto& r : records) {
    if (r.config_id == target) by_key[r.key] = &r;
  }
  for (const auto& fold : folds) {
    std::vector<de::PerformanceRecord> train;
    for (const auto& k : fold.train_keys) {
      const auto it = by_key.find(k);
      if (it == by_key.end()) {
        throw ContractViolation("performance.csv lacks " + target + " on " + to_string(k));
      }
      train.push_back(*it->second);
    }
    write_file(out / fold_train_targets_file(fold.fold_id),
               [&](std::ostream& o) { de::write_performance_csv(o, train); });
  }
}

void stage_train(const RunConfig& c, const fs::path& out, const Execution& exec,
                 nlohmann::json& info) {
  const auto fm = load_features(out);
  const auto folds = load_folds(out);
  const int width = static_cast<int>(fm.names.size());
  const auto sizes = portfolio_sizes(c, width);
  const int fp_size = footprint_size(c, width);
  const auto root = derive_seed(c.master_seed, "train");
  info["seed"] = root;

  for (int f : fold_ids(c)) {
    const auto& fold = fold_by_id(folds, f);
    const auto train_records = load_performance(out / fold_train_targets_file(f));
    const auto targets = target_values(train_records, target_config(c));
    std::vector<double> y;
    for (const auto& k : fold.train_keys) {
      const auto it = targets.find(k);
      if (it == targets.end()) throw ContractViolation("no training target for " + to_string(k));
      y.push_back(it->second);
    }
    const Matrix x_all = select(fm, fold.train_keys, all_columns(fm));

    for (auto kind : c.model_kinds) {
      const auto tag = seed_tag(kind, f);
      models::ModelSpec spec = c.model_spec;
      spec.kind = kind;
      spec.forest.seed = derive_seed(root, "select/" + tag);
      shap::ExplainParams ep{c.n_permutations, c.sampling_background,
                             derive_seed(root, "select-explain/" + tag)};
      const auto ranking = shap::select_portfolio(x_all, y, fm.names, width, spec, ep, exec);
      write_file(out / ranking_file(kind, f),
                 [&](std::ostream& o) { shap::write_portfolio_json(o, ranking); });

      write_file(out / predictions_file(kind, f), [&](std::ostream& o) {
        csv::Writer w(o);
        w.row(std::string_view("fold_id"), std::string_view("portfolio_size"),
              std::string_view("problem_id"), std::string_view("instance_id"),
              std::string_view("dimension"), std::string_view("predicted"));
        for (int size : sizes) {
          shap::FeaturePortfolio portfolio = ranking;
          portfolio.feature_names.resize(static_cast<std::size_t>(size));
          portfolio.importance.resize(static_cast<std::size_t>(size));
          const auto cols = shap::portfolio_columns(portfolio, fm.names);
          spec.forest.seed = derive_seed(root, "fit/" + tag + "/" + std::to_string(size));
          const auto model = models::fit_model(spec, select(fm, fold.train_keys, cols), y, exec);
          const auto pred = models::predict_rows(model, select(fm, fold.test_keys, cols));
          for (std::size_t i = 0; i < fold.test_keys.size(); ++i) {
            const auto& k = fold.test_keys[i];
            w.row(f, size, k.problem_id, k.instance_id, k.dimension,
                  pred[static_cast<Eigen::Index>(i)]);
          }
          if (size == fp_size) {
            write_file(out / model_file(kind, f), [&](std::ostream& mo) { models::save_model(mo, model); });
            write_file(out / portfolio_file(kind, f),
                       [&](std::ostream& po) { shap::write_portfolio_json(po, portfolio); });
          }
        }
      });
    }
  }
}

void stage_explain(const RunConfig& c, const fs::path& out, const Execution& exec,
                   nlohmann::json& info) {
  const auto fm = load_features(out);
  const auto folds = load_folds(out);
  const auto root = derive_seed(c.master_seed, "explain");
  info["seed"] = root;
  double worst_gap = 0.0;
  for (auto kind : c.model_kinds) {
    for (int f : fold_ids(c)) {
      const auto& fold = fold_by_id(folds, f);
      auto pin = open_in(out / portfolio_file(kind, f));
      const auto portfolio = shap::read_portfolio_json(pin);
      auto min = open_in(out / model_file(kind, f));
      const auto model = models::load_model(min);
      const auto cols = shap::portfolio_columns(portfolio, fm.names);
      const Matrix background = select(fm, fold.train_keys, cols);
      const Matrix x = select(fm, fold.test_keys, cols);
      shap::ExplainParams ep{c.n_permutations, c.sampling_background,
                             derive_seed(root, seed_tag(kind, f))};
      const auto reps = shap::explain_rows(model, x, fold.test_keys, background, ep, exec);
      for (const auto& r : reps) {
        double s = r.base_value;
        for (double v : r.phi) s += v;
        worst_gap = std::max(worst_gap, std::abs(s - r.prediction));
      }
      write_file(out / meta_file(kind, f),
                 [&](std::ostream& o) { shap::write_meta_csv(o, reps, portfolio.feature_names); });
    }
  }
  info["max_efficiency_gap"] = worst_gap;
}

struct PredictionRow {
  int portfolio_size;
  InstanceKey key;
  double predicted;
};

std::vector<PredictionRow> load_predictions(const fs::path& path) {
  auto in = open_in(path);
  const auto t = csv::read(in);
  const auto cs = t.column("portfolio_size");
  const auto cp = t.column("problem_id");
  const auto ci = t.column("instance_id");
  const auto cd = t.column("dimension");
  const auto cv = t.column("predicted");
  std::vector<PredictionRow> rows;
  for (const auto& r : t.rows) {
    rows.push_back({static_cast<int>(csv::parse_int(r[cs])),
                    {static_cast<int>(csv::parse_int(r[cp])), static_cast<int>(csv::parse_int(r[ci])),
                     static_cast<int>(csv::parse_int(r[cd]))},
                    csv::parse_double(r[cv])});
  }
  return rows;
}

void stage_footprint(const RunConfig& c, const fs::path& out, nlohmann::json& info) {
  const auto records = load_performance(out / "performance.csv");
  const auto truth = target_values(records, target_config(c));
  const auto folds = load_folds(out);
  const int fp_size = footprint_size(c, schema_width());

  std::vector<footprint::FootprintAssignment> main;
  std::vector<std::vector<footprint::FootprintAssignment>> alt(c.sensitivity_p.size());
  std::ostringstream metrics, thresholds;
  csv::Writer mw(metrics), tw(thresholds);
  mw.row(std::string_view("model_kind"), std::string_view("portfolio_size"),
         std::string_view("fold_id"), std::string_view("mae"), std::string_view("r2"));
  tw.row(std::string_view("fold_id"), std::string_view("t"), std::string_view("p"),
         std::string_view("scale"));

  std::map<int, double> t_by_fold;
  for (int f : fold_ids(c)) {
    const auto& fold = fold_by_id(folds, f);
    double t = c.t_value;
    if (c.t_mode == TargetMode::TrainMedian) {
      std::vector<double> train;
      for (const auto& k : fold.train_keys) train.push_back(truth.at(k));
      t = footprint::compute_target_t(train);
    }
    t_by_fold[f] = t;
    tw.row(f, t, c.p, footprint::to_string(c.scale));
  }

  auto truth_of = [&](const InstanceKey& k) {
    const auto it = truth.find(k);
    if (it == truth.end()) throw ContractViolation("performance.csv lacks " + to_string(k));
    return it->second;
  };

  for (auto kind : c.model_kinds) {
    for (int f : fold_ids(c)) {
      const auto rows = load_predictions(out / predictions_file(kind, f));
      std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_size;
      std::vector<footprint::Prediction> preds;
      for (const auto& r : rows) {
        const double tv = truth_of(r.key);
        by_size[r.portfolio_size].first.push_back(tv);
        by_size[r.portfolio_size].second.push_back(r.predicted);
        if (r.portfolio_size == fp_size) preds.push_back({r.key, tv, r.predicted});
      }
      for (const auto& [size, pair] : by_size) {
        const auto m = models::compute_metrics(pair.first, pair.second);
        mw.row(models::to_string(kind), size, f, m.mae, m.r2);
      }
      footprint::Thresholds th{t_by_fold.at(f), c.p, c.eps_guard};
      const auto a = footprint::footprint_fold(preds, th, f, kind, c.scale);
      main.insert(main.end(), a.begin(), a.end());
      for (std::size_t s = 0; s < c.sensitivity_p.size(); ++s) {
        th.p = c.sensitivity_p[s];
        const auto b = footprint::footprint_fold(preds, th, f, kind, c.scale);
        alt[s].insert(alt[s].end(), b.begin(), b.end());
      }
    }
  }

  write_file(out / "assignments.csv", [&](std::ostream& o) { footprint::write_assignments_csv(o, main); });
  write_text(out / "metrics.csv", metrics.str());
  write_text(out / "thresholds.csv", thresholds.str());
  for (std::size_t s = 0; s < c.sensitivity_p.size(); ++s) {
    const double p = c.sensitivity_p[s];
    write_file(out / sensitivity_assignments_file(p),
               [&](std::ostream& o) { footprint::write_assignments_csv(o, alt[s]); });
    const auto report = footprint::sensitivity(main, alt[s]);
    write_file(out / transitions_file(p),
               [&](std::ostream& o) { footprint::write_transitions_csv(o, report); });
    int changed = 0;
    for (const auto& tr : report.items) changed += tr.from != tr.to;
    info["transitions_" + p_tag(p)] = changed;
  }
  info["assignments"] = main.size();
}

void stage_report(const RunConfig& c, const fs::path& out) {
  const auto fm = load_features(out);
  auto ain = open_in(out / "assignments.csv");
  const auto assignments = footprint::read_assignments_csv(ain);

  const auto rows = viz::distribution_rows(assignments);
  write_text(out / "report/distribution_table.txt", viz::distribution_table_text(rows));
  write_file(out / "report/distribution_table.csv",
             [&](std::ostream& o) { viz::write_distribution_csv(o, rows); });
  std::string tex;
  for (const auto& r : rows) tex += viz::distribution_latex_row(r) + "\n";
  write_text(out / "report/distribution_table.tex", tex);

  for (auto kind : c.model_kinds) {
    for (int f : fold_ids(c)) {
      auto pin = open_in(out / portfolio_file(kind, f));
      const auto portfolio = shap::read_portfolio_json(pin);
      auto min = open_in(out / meta_file(kind, f));
      const auto reps = shap::read_meta_csv(min, nullptr);
      std::vector<InstanceKey> keys;
      for (const auto& r : reps) keys.push_back(r.key);
      std::vector<footprint::FootprintAssignment> fold_assign;
      for (const auto& a : assignments) {
        if (a.fold_id == f && a.model_kind == kind) fold_assign.push_back(a);
      }

      const auto stem = figure_stem(kind, f);
      const std::string label = std::string(models::display_label(kind)) + " fold " + std::to_string(f);
      const auto embedding = viz::embed_2d(viz::phi_matrix(reps), keys);
      write_text(out / ("figures/footprint_" + stem + ".svg"),
                 viz::footprint_plot_svg(embedding, fold_assign, "footprint " + label));

      const int top_k = std::min(c.beeswarm_top_k, portfolio.size());
      const auto bees = viz::beeswarm_rows(reps, portfolio, top_k, fm);
      write_file(out / ("figures/beeswarm_" + stem + ".csv"),
                 [&](std::ostream& o) { viz::write_beeswarm_csv(o, bees); });
      write_text(out / ("figures/beeswarm_" + stem + ".svg"),
                 viz::beeswarm_svg(bees, "top features " + label));

      for (int rank = 1; rank <= 2; ++rank) {
        const auto& name = bees[static_cast<std::size_t>(std::min(rank, top_k) - 1) * reps.size()].feature;
        write_text(out / ("figures/feature_" + stem + "_rank" + std::to_string(rank) + ".svg"),
                   viz::feature_distribution_svg(embedding, name, fm));
      }
    }
  }
}

}  // namespace

void run_stage_body(Stage stage, const RunConfig& config, const fs::path& out,
                    const Execution& exec, nlohmann::json& info) {
  switch (stage) {
    case Stage::Suite:
      return stage_suite(config, out);
    case Stage::Solve:
      return stage_solve(config, out, exec, info);
    case Stage::Features:
      return stage_features(config, out, exec, info);
    case Stage::Folds:
      return stage_folds(config, out, info);
    case Stage::Train:
      return stage_train(config, out, exec, info);
    case Stage::Explain:
      return stage_explain(config, out, exec, info);
    case Stage::Footprint:
      return stage_footprint(config, out, info);
    case Stage::Report:
      return stage_report(config, out);
  }
}

}  // namespace detail
}  // namespace aif::pipeline
