#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "aif/csv.hpp"
#include "aif/ela.hpp"
#include "aif/errors.hpp"
#include "pipeline/internal.hpp"

namespace aif::pipeline {
namespace {

namespace pt = boost::property_tree;

constexpr std::string_view kDeConfigPrefix = "de_config:";

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"master_seed"}},
      {"suite", {"problems", "instances", "dimension"}},
      {"de", {"configs", "budget_multiplier", "n_runs"}},
      {"ela", {"sample_multiplier"}},
      {"model",
       {"kinds", "portfolio_sizes", "k_folds", "n_trees", "min_samples_leaf", "max_depth", "mtry",
        "knn_neighbors", "kernel_penalty", "kernel_bandwidth", "n_permutations",
        "sampling_background", "target", "footprint_portfolio"}},
      {"footprint", {"p", "t_mode", "t", "scale", "eps_guard", "sensitivity_p", "beeswarm_top_k"}},
  };
  return keys;
}

const std::set<std::string> kDeConfigKeys = {"strategy", "f", "cr", "population"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> list_items(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& item : csv::split(value)) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

class Reader {
 public:
  Reader(std::string section, const pt::ptree& tree) : section_(std::move(section)), tree_(tree) {}

  template <typename Fn>
  void with(const std::string& key, Fn&& fn) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return;
    try {
      fn(trim(*v));
    } catch (const ConfigError& e) {
      throw ConfigError(name(key) + ": " + e.what());
    } catch (const std::exception&) {
      throw ConfigError(name(key) + ": cannot parse '" + trim(*v) + "'");
    }
  }

  void integer(const std::string& key, int& out) const {
    with(key, [&](const std::string& v) { out = static_cast<int>(csv::parse_int(v)); });
  }
  void real(const std::string& key, double& out) const {
    with(key, [&](const std::string& v) { out = csv::parse_double(v); });
  }

 private:
  std::string name(const std::string& key) const { return section_ + "." + key; }
  std::string section_;
  const pt::ptree& tree_;
};

/// "1-5, 8" -> {1, 2, 3, 4, 5, 8}.
std::vector<int> parse_id_list(const std::string& value) {
  std::vector<int> out;
  for (const auto& item : list_items(value)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(static_cast<int>(csv::parse_int(item)));
      continue;
    }
    const auto lo = static_cast<int>(csv::parse_int(trim(item.substr(0, dash))));
    const auto hi = static_cast<int>(csv::parse_int(trim(item.substr(dash + 1))));
    if (hi < lo) throw ConfigError("empty range '" + item + "'");
    for (int i = lo; i <= hi; ++i) out.push_back(i);
  }
  return out;
}

nlohmann::json section_json(const RunConfig& c, std::string_view section) {
  using nlohmann::json;
  if (section == "run") return {{"master_seed", c.master_seed}};
  if (section == "suite") {
    return {{"problems", c.suite.problem_ids},
            {"instances", c.suite.instance_ids},
            {"dimension", c.suite.dimension}};
  }
  if (section == "de") {
    json configs = json::array();
    for (const auto& d : detail::de_configs(c)) {
      configs.push_back({{"id", d.config_id},
                         {"strategy", std::string(de::to_string(d.strategy))},
                         {"f", d.f},
                         {"cr", d.cr},
                         {"population", d.population_size}});
    }
    return {{"configs", configs}, {"budget_multiplier", c.budget_multiplier}, {"n_runs", c.n_runs}};
  }
  if (section == "ela") return {{"sample_multiplier", c.sample_multiplier}};
  if (section == "model") {
    std::vector<std::string> kinds;
    for (auto k : c.model_kinds) kinds.emplace_back(models::to_string(k));
    const auto& f = c.model_spec.forest;
    return {{"kinds", kinds},
            {"portfolio_sizes", c.portfolio_sizes},
            {"k_folds", c.k_folds},
            {"n_trees", f.n_trees},
            {"min_samples_leaf", f.min_samples_leaf},
            {"max_depth", f.max_depth},
            {"mtry", f.mtry},
            {"knn_neighbors", c.model_spec.knn_neighbors},
            {"kernel_penalty", c.model_spec.kernel.penalty},
            {"kernel_bandwidth", c.model_spec.kernel.bandwidth},
            {"n_permutations", c.n_permutations},
            {"sampling_background", c.sampling_background},
            {"target", detail::target_config(c)},
            {"footprint_portfolio", c.footprint_portfolio}};
  }
  if (section == "footprint") {
    return {{"p", c.p},
            {"t_mode", c.t_mode == TargetMode::TrainMedian ? "train-median" : "explicit"},
            {"t", c.t_value},
            {"scale", std::string(footprint::to_string(c.scale))},
            {"eps_guard", c.eps_guard},
            {"sensitivity_p", c.sensitivity_p},
            {"beeswarm_top_k", c.beeswarm_top_k}};
  }
  throw ContractViolation("unknown config section " + std::string(section));
}

std::vector<std::string_view> stage_sections(Stage stage) {
  switch (stage) {
    case Stage::Suite:
      return {"suite"};
    case Stage::Solve:
      return {"run", "suite", "de"};
    case Stage::Features:
      return {"run", "suite", "ela"};
    case Stage::Folds:
      return {"run", "de", "model"};
    case Stage::Train:
    case Stage::Explain:
      return {"run", "model"};
    case Stage::Footprint:
    case Stage::Report:
      return {"run", "model", "footprint"};
  }
  return {};
}

}  // namespace

std::vector<int> all_problems() {
  std::vector<int> ids(suite::kNumProblems);
  for (int i = 0; i < suite::kNumProblems; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  return ids;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Suite:
      return "suite";
    case Stage::Solve:
      return "solve";
    case Stage::Features:
      return "features";
    case Stage::Folds:
      return "folds";
    case Stage::Train:
      return "train";
    case Stage::Explain:
      return "explain";
    case Stage::Footprint:
      return "footprint";
    case Stage::Report:
      return "report";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : kStages) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  RunConfig c;
  std::vector<de::DeConfig> custom;
  std::vector<std::string> de_ids;
  for (const auto& [section, body] : tree) {
    const bool is_de_config = section.starts_with(kDeConfigPrefix);
    const auto allowed = allowed_keys().find(section);
    if (!is_de_config && allowed == allowed_keys().end()) {
      if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const auto& keys = is_de_config ? kDeConfigKeys : allowed->second;
      if (!keys.contains(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
    Reader r(section, body);
    if (is_de_config) {
      de::DeConfig d;
      d.config_id = section.substr(kDeConfigPrefix.size());
      if (d.config_id.empty()) throw ConfigError("[de_config:] needs a name");
      r.with("strategy", [&](const std::string& v) { d.strategy = de::parse_strategy(v); });
      r.real("f", d.f);
      r.real("cr", d.cr);
      d.population_size = 0;  // resolved against the dimension below
      r.integer("population", d.population_size);
      custom.push_back(std::move(d));
    } else if (section == "run") {
      r.with("master_seed", [&](const std::string& v) {
        c.master_seed = static_cast<std::uint64_t>(csv::parse_int(v));
      });
    } else if (section == "suite") {
      r.with("problems", [&](const std::string& v) { c.suite.problem_ids = parse_id_list(v); });
      r.with("instances", [&](const std::string& v) { c.suite.instance_ids = parse_id_list(v); });
      r.integer("dimension", c.suite.dimension);
    } else if (section == "de") {
      r.with("configs", [&](const std::string& v) { de_ids = list_items(v); });
      r.integer("budget_multiplier", c.budget_multiplier);
      r.integer("n_runs", c.n_runs);
    } else if (section == "ela") {
      r.integer("sample_multiplier", c.sample_multiplier);
    } else if (section == "model") {
      r.with("kinds", [&](const std::string& v) {
        c.model_kinds.clear();
        for (const auto& k : list_items(v)) c.model_kinds.push_back(models::parse_model_kind(k));
      });
      r.with("portfolio_sizes", [&](const std::string& v) {
        c.portfolio_sizes.clear();
        for (const auto& s : list_items(v)) {
          c.portfolio_sizes.push_back(s == "all" ? kAllFeatures : static_cast<int>(csv::parse_int(s)));
        }
      });
      r.integer("k_folds", c.k_folds);
      r.integer("n_trees", c.model_spec.forest.n_trees);
      r.integer("min_samples_leaf", c.model_spec.forest.min_samples_leaf);
      r.integer("max_depth", c.model_spec.forest.max_depth);
      r.integer("mtry", c.model_spec.forest.mtry);
      r.integer("knn_neighbors", c.model_spec.knn_neighbors);
      r.real("kernel_penalty", c.model_spec.kernel.penalty);
      r.real("kernel_bandwidth", c.model_spec.kernel.bandwidth);
      r.integer("n_permutations", c.n_permutations);
      r.integer("sampling_background", c.sampling_background);
      r.with("target", [&](const std::string& v) { c.target_config = v; });
      r.with("footprint_portfolio", [&](const std::string& v) {
        c.footprint_portfolio = v == "all" ? kAllFeatures : static_cast<int>(csv::parse_int(v));
      });
    } else if (section == "footprint") {
      r.real("p", c.p);
      r.with("t_mode", [&](const std::string& v) {
        if (v == "train-median") {
          c.t_mode = TargetMode::TrainMedian;
        } else if (v == "explicit") {
          c.t_mode = TargetMode::Explicit;
        } else {
          throw ConfigError("expected train-median or explicit");
        }
      });
      r.real("t", c.t_value);
      r.with("scale", [&](const std::string& v) { c.scale = footprint::parse_scale(v); });
      r.real("eps_guard", c.eps_guard);
      r.with("sensitivity_p", [&](const std::string& v) {
        c.sensitivity_p.clear();
        for (const auto& s : list_items(v)) c.sensitivity_p.push_back(csv::parse_double(s));
      });
      r.integer("beeswarm_top_k", c.beeswarm_top_k);
    }
  }

  // Named configs: custom sections first, then the default portfolio.
  const auto defaults = de::default_portfolio(c.suite.dimension);
  for (auto& d : custom) {
    if (d.population_size == 0) d.population_size = defaults.front().population_size;
  }
  auto lookup = [&](const std::string& id) -> de::DeConfig {
    for (const auto& d : custom) {
      if (d.config_id == id) return d;
    }
    for (const auto& d : defaults) {
      if (d.config_id == id) return d;
    }
    throw ConfigError("de.configs: unknown DE config '" + id + "'");
  };
  if (!de_ids.empty()) {
    for (const auto& id : de_ids) c.de_configs.push_back(lookup(id));
  } else if (!custom.empty()) {
    c.de_configs = custom;
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

namespace detail {

std::vector<de::DeConfig> de_configs(const RunConfig& config) {
  return config.de_configs.empty() ? de::default_portfolio(config.suite.dimension)
                                   : config.de_configs;
}

std::string target_config(const RunConfig& config) {
  if (!config.target_config.empty()) return config.target_config;
  return de_configs(config).front().config_id;
}

std::vector<int> portfolio_sizes(const RunConfig& config, int n_features) {
  std::vector<int> out;
  for (int s : config.portfolio_sizes) out.push_back(s == kAllFeatures ? n_features : s);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int footprint_size(const RunConfig& config, int n_features) {
  return config.footprint_portfolio == kAllFeatures ? n_features : config.footprint_portfolio;
}

}  // namespace detail

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> v;
  auto require = [&](bool ok, std::string message) {
    if (!ok) v.push_back(std::move(message));
  };
  const int n_features = static_cast<int>(ela::schema().size());

  require(!c.suite.problem_ids.empty(), "suite.problems is empty");
  for (int p : c.suite.problem_ids) {
    require(p >= 1 && p <= suite::kNumProblems,
            "suite.problems: id " + std::to_string(p) + " outside 1..24");
  }
  require(std::set<int>(c.suite.problem_ids.begin(), c.suite.problem_ids.end()).size() ==
              c.suite.problem_ids.size(),
          "suite.problems has duplicates");
  require(!c.suite.instance_ids.empty(), "suite.instances is empty");
  for (int i : c.suite.instance_ids) {
    require(i >= 1, "suite.instances: id " + std::to_string(i) + " must be >= 1");
  }
  require(std::set<int>(c.suite.instance_ids.begin(), c.suite.instance_ids.end()).size() ==
              c.suite.instance_ids.size(),
          "suite.instances has duplicates");
  require(c.suite.dimension >= 2, "suite.dimension must be >= 2");

  require(c.budget_multiplier >= 1, "de.budget_multiplier must be >= 1");
  require(c.n_runs >= 1, "de.n_runs must be >= 1");
  std::set<std::string> ids;
  for (const auto& d : detail::de_configs(c)) {
    require(ids.insert(d.config_id).second, "de.configs: duplicate id " + d.config_id);
    try {
      d.validate();
    } catch (const ConfigError& e) {
      v.push_back("de config " + d.config_id + ": " + e.what());
    }
  }
  require(ids.contains(detail::target_config(c)),
          "model.target '" + detail::target_config(c) + "' is not a configured DE config");

  require(c.sample_multiplier >= 10, "ela.sample_multiplier must be >= 10");
  const int d = c.suite.dimension;
  require(c.sample_multiplier * d > 1 + 2 * d + d * (d - 1) / 2,
          "ela.sample_multiplier too small for the quadratic meta-model");

  require(!c.model_kinds.empty(), "model.kinds is empty");
  require(c.k_folds >= 2, "model.k_folds must be >= 2");
  const auto per_problem = static_cast<int>(c.suite.instance_ids.size());
  if (c.k_folds >= 2) {
    require(per_problem % c.k_folds == 0,
            "model.k_folds = " + std::to_string(c.k_folds) + " does not divide the " +
                std::to_string(per_problem) + " instances per problem");
  }
  require(!c.portfolio_sizes.empty(), "model.portfolio_sizes is empty");
  for (int s : c.portfolio_sizes) {
    require(s == kAllFeatures || (s >= 1 && s <= n_features),
            "model.portfolio_sizes: " + std::to_string(s) + " outside 1.." +
                std::to_string(n_features));
  }
  const int fp = detail::footprint_size(c, n_features);
  require(fp >= 1 && fp <= n_features, "model.footprint_portfolio outside 1.." +
                                           std::to_string(n_features));
  require(c.model_spec.forest.n_trees >= 1, "model.n_trees must be >= 1");
  require(c.model_spec.forest.min_samples_leaf >= 1, "model.min_samples_leaf must be >= 1");
  require(c.model_spec.forest.max_depth >= 0, "model.max_depth must be >= 0");
  require(c.model_spec.forest.mtry >= 0, "model.mtry must be >= 0");
  const int n_train = c.k_folds >= 2 ? static_cast<int>(c.suite.problem_ids.size()) *
                                           (per_problem - per_problem / c.k_folds)
                                     : 0;
  require(c.model_spec.knn_neighbors >= 1 && c.model_spec.knn_neighbors <= std::max(1, n_train),
          "model.knn_neighbors must lie in 1..training set size");
  require(c.model_spec.kernel.penalty > 0.0, "model.kernel_penalty must be positive");
  require(c.model_spec.kernel.bandwidth >= 0.0, "model.kernel_bandwidth must be >= 0");
  require(c.n_permutations >= 1, "model.n_permutations must be >= 1");
  require(c.sampling_background >= 0, "model.sampling_background must be >= 0");

  require(c.p > 0.0 && c.p <= 1.0, "footprint.p must lie in (0, 1]");
  for (double p : c.sensitivity_p) {
    require(p > 0.0 && p <= 1.0, "footprint.sensitivity_p values must lie in (0, 1]");
  }
  require(c.eps_guard > 0.0, "footprint.eps_guard must be positive");
  require(std::isfinite(c.t_value), "footprint.t must be finite");
  require(c.beeswarm_top_k >= 1 && c.beeswarm_top_k <= fp,
          "footprint.beeswarm_top_k must lie in 1..footprint portfolio size");
  return v;
}

std::string stage_config_json(const RunConfig& config, Stage stage) {
  nlohmann::json j;
  for (auto s : stage_sections(stage)) j[std::string(s)] = section_json(config, s);
  return j.dump();
}

std::string config_json(const RunConfig& config) {
  nlohmann::json j;
  for (auto s : {"run", "suite", "de", "ela", "model", "footprint"}) j[s] = section_json(config, s);
  return j.dump();
}

}  // namespace aif::pipeline
