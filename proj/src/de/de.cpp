#include "aif/de.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/rng.hpp"
#include "aif/stats.hpp"

namespace aif::de {
namespace {

double reflect(double x) {
  constexpr double lo = suite::kLowerBound;
  constexpr double hi = suite::kUpperBound;
  if (x >= lo && x <= hi) return x;
  const double width = hi - lo;
  double t = std::fmod(x - lo, 2.0 * width);
  if (t < 0.0) t += 2.0 * width;
  if (t > width) t = 2.0 * width - t;
  return lo + t;
}

// Draws `count` distinct indices from [0, n) excluding `exclude`.
void pick_distinct(Rng& rng, int n, int exclude, std::span<int> out) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    int r;
    bool clash;
    do {
      r = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
      clash = r == exclude;
      for (std::size_t j = 0; j < k && !clash; ++j) clash = out[j] == r;
    } while (clash);
    out[k] = r;
  }
}

int required_population(Strategy s) { return s == Strategy::Rand2Bin ? 6 : 4; }

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Rand1Bin:
      return "rand/1/bin";
    case Strategy::Best1Bin:
      return "best/1/bin";
    case Strategy::Rand2Bin:
      return "rand/2/bin";
    case Strategy::CurrentToBest1Bin:
      return "current-to-best/1/bin";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Rand1Bin, Strategy::Best1Bin, Strategy::Rand2Bin,
                 Strategy::CurrentToBest1Bin}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown DE strategy '" + std::string(name) + "'");
}

void DeConfig::validate() const {
  if (config_id.empty()) throw ConfigError("DE config needs an id");
  if (!(f > 0.0 && f <= 2.0)) throw ConfigError(config_id + ": F must lie in (0, 2]");
  if (!(cr >= 0.0 && cr <= 1.0)) throw ConfigError(config_id + ": Cr must lie in [0, 1]");
  if (population_size < required_population(strategy)) {
    throw ConfigError(config_id + ": population_size " + std::to_string(population_size) +
                      " too small for " + std::string(to_string(strategy)));
  }
}

std::vector<DeConfig> default_portfolio(int dimension) {
  const int pop = std::min(10 * dimension, 100);
  return {
      {"DE1", Strategy::Rand1Bin, 0.5, 0.9, pop},
      {"DE2", Strategy::Best1Bin, 0.8, 0.5, pop},
      {"DE3", Strategy::Rand2Bin, 0.5, 0.3, pop},
  };
}

RunResult minimize(const Objective& objective, int dimension, const DeConfig& config, int budget,
                   std::uint64_t seed, const RunOptions& options) {
  config.validate();
  if (dimension < 1) throw ConfigError("DE: dimension must be positive");
  const int np = config.population_size;
  if (budget < np) {
    throw ConfigError("DE: budget " + std::to_string(budget) + " below population size " +
                      std::to_string(np));
  }
  const auto d = static_cast<std::size_t>(dimension);
  Rng rng(seed);
  RunResult result;
  result.best_value = std::numeric_limits<double>::infinity();
  if (options.record_trace) result.best_trace.reserve(static_cast<std::size_t>(budget));

  auto eval = [&](std::span<const double> x) {
    const double v = objective(x);
    ++result.evaluations;
    if (v < result.best_value) {
      result.best_value = v;
      result.best_point.assign(x.begin(), x.end());
    }
    if (options.record_trace) result.best_trace.push_back(result.best_value);
    return v;
  };

  std::vector<double> pop(static_cast<std::size_t>(np) * d);
  std::vector<double> fit(static_cast<std::size_t>(np));
  for (auto& v : pop) v = rng.uniform(suite::kLowerBound, suite::kUpperBound);
  for (int i = 0; i < np; ++i) {
    fit[static_cast<std::size_t>(i)] = eval({pop.data() + static_cast<std::size_t>(i) * d, d});
  }

  auto row = [&](const std::vector<double>& m, int i) { return m.data() + static_cast<std::size_t>(i) * d; };
  std::vector<double> next_pop = pop;
  std::vector<double> next_fit = fit;
  std::vector<double> trial(d);
  std::array<int, 5> idx{};
  const double F = config.f;

  while (result.evaluations < budget) {
    const auto best_it = std::min_element(fit.begin(), fit.end());
    const int best = static_cast<int>(best_it - fit.begin());
    for (int i = 0; i < np && result.evaluations < budget; ++i) {
      const double* xi = row(pop, i);
      const double* xb = row(pop, best);
      switch (config.strategy) {
        case Strategy::Rand1Bin: {
          pick_distinct(rng, np, i, std::span<int>(idx).first(3));
          const double *a = row(pop, idx[0]), *b = row(pop, idx[1]), *c = row(pop, idx[2]);
          for (std::size_t j = 0; j < d; ++j) trial[j] = a[j] + F * (b[j] - c[j]);
          break;
        }
        case Strategy::Best1Bin: {
          pick_distinct(rng, np, i, std::span<int>(idx).first(2));
          const double *a = row(pop, idx[0]), *b = row(pop, idx[1]);
          for (std::size_t j = 0; j < d; ++j) trial[j] = xb[j] + F * (a[j] - b[j]);
          break;
        }
        case Strategy::Rand2Bin: {
          pick_distinct(rng, np, i, std::span<int>(idx).first(5));
          const double *a = row(pop, idx[0]), *b = row(pop, idx[1]), *c = row(pop, idx[2]),
                       *e = row(pop, idx[3]), *g = row(pop, idx[4]);
          for (std::size_t j = 0; j < d; ++j) trial[j] = a[j] + F * (b[j] - c[j]) + F * (e[j] - g[j]);
          break;
        }
        case Strategy::CurrentToBest1Bin: {
          pick_distinct(rng, np, i, std::span<int>(idx).first(2));
          const double *a = row(pop, idx[0]), *b = row(pop, idx[1]);
          for (std::size_t j = 0; j < d; ++j) {
            trial[j] = xi[j] + F * (xb[j] - xi[j]) + F * (a[j] - b[j]);
          }
          break;
        }
      }
      // Binomial crossover; jrand guarantees at least one mutant coordinate.
      const std::size_t jrand = rng.index(d);
      for (std::size_t j = 0; j < d; ++j) {
        const bool take = j == jrand || rng.uniform() < config.cr;
        trial[j] = take ? reflect(trial[j]) : xi[j];
      }
      const double ft = eval(trial);
      const auto ui = static_cast<std::size_t>(i);
      const bool replace = ft <= fit[ui];
      if (options.on_selection) options.on_selection(fit[ui], ft, replace);
      if (replace) {
        std::copy(trial.begin(), trial.end(), next_pop.begin() + static_cast<std::ptrdiff_t>(ui * d));
        next_fit[ui] = ft;
      }
    }
    pop = next_pop;
    fit = next_fit;
  }
  return result;
}

double run_de(const suite::ProblemInstance& instance, const DeConfig& config, int budget,
              std::uint64_t seed) {
  const auto objective = [&instance](std::span<const double> x) { return instance.evaluate(x); };
  const auto result = minimize(objective, instance.dimension(), config, budget, seed);
  return suite::precision(instance, result.best_value);
}

double median_log_precision(std::span<const double> raw_precisions) {
  return std::log10(std::max(stats::median(raw_precisions), kPrecisionFloor));
}

PerformanceRecord measure(const suite::ProblemInstance& instance, const DeConfig& config,
                          int budget, int n_runs, std::uint64_t base_seed, const Execution& exec) {
  if (n_runs < 1) throw ConfigError("measure: n_runs must be >= 1");
  config.validate();
  if (budget < config.population_size) {
    throw ConfigError("DE: budget " + std::to_string(budget) + " below population size " +
                      std::to_string(config.population_size));
  }
  PerformanceRecord rec;
  rec.config_id = config.config_id;
  rec.key = instance.key();
  rec.raw_precisions.resize(static_cast<std::size_t>(n_runs));
  parallel_for(rec.raw_precisions.size(), exec, [&](std::size_t r) {
    rec.raw_precisions[r] = run_de(instance, config, budget, base_seed + r);
  });
  rec.median_log_precision = median_log_precision(rec.raw_precisions);
  return rec;
}

std::uint64_t base_seed_for(std::uint64_t master_seed, std::string_view config_id,
                            const InstanceKey& key) {
  std::uint64_t s = derive_seed(master_seed, "solve");
  s = derive_seed(s, config_id);
  s = derive_seed(s, static_cast<std::uint64_t>(key.problem_id));
  s = derive_seed(s, static_cast<std::uint64_t>(key.instance_id));
  return derive_seed(s, static_cast<std::uint64_t>(key.dimension));
}

std::vector<PerformanceRecord> measure_portfolio(std::span<const suite::ProblemInstance> instances,
                                                 std::span<const DeConfig> configs, int budget,
                                                 int n_runs, std::uint64_t master_seed,
                                                 const Execution& exec) {
  if (n_runs < 1) throw ConfigError("measure: n_runs must be >= 1");
  std::vector<PerformanceRecord> records;
  for (const auto& c : configs) {
    c.validate();
    if (budget < c.population_size) {
      throw ConfigError("DE: budget " + std::to_string(budget) + " below population size of " +
                        c.config_id);
    }
    for (const auto& inst : instances) {
      records.push_back({c.config_id, inst.key(), std::vector<double>(static_cast<std::size_t>(n_runs)), 0.0});
    }
  }
  const std::size_t runs = static_cast<std::size_t>(n_runs);
  const std::size_t n_inst = instances.size();
  parallel_for(records.size() * runs, exec, [&](std::size_t item) {
    const std::size_t cell = item / runs;
    const std::size_t r = item % runs;
    const auto& config = configs[cell / n_inst];
    const auto& inst = instances[cell % n_inst];
    const std::uint64_t base = base_seed_for(master_seed, config.config_id, inst.key());
    records[cell].raw_precisions[r] = run_de(inst, config, budget, base + r);
  });
  for (auto& rec : records) rec.median_log_precision = median_log_precision(rec.raw_precisions);
  return records;
}

void write_performance_csv(std::ostream& out, std::span<const PerformanceRecord> records) {
  csv::Writer w(out);
  const std::size_t runs = records.empty() ? 0 : records.front().raw_precisions.size();
  w.field("config_id").field("problem_id").field("instance_id").field("dimension");
  w.field("n_runs").field("median_log_precision");
  for (std::size_t r = 1; r <= runs; ++r) w.field("run_" + std::to_string(r));
  w.end_row();
  for (const auto& rec : records) {
    if (rec.raw_precisions.size() != runs) {
      throw ContractViolation("performance table: ragged run counts");
    }
    w.field(rec.config_id).field(rec.key.problem_id).field(rec.key.instance_id);
    w.field(rec.key.dimension).field(rec.raw_precisions.size()).field(rec.median_log_precision);
    for (double v : rec.raw_precisions) w.field(v);
    w.end_row();
  }
}

std::vector<PerformanceRecord> read_performance_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto c_cfg = t.column("config_id");
  const auto c_p = t.column("problem_id");
  const auto c_i = t.column("instance_id");
  const auto c_d = t.column("dimension");
  const auto c_n = t.column("n_runs");
  const auto c_m = t.column("median_log_precision");
  std::vector<PerformanceRecord> out;
  for (const auto& row : t.rows) {
    PerformanceRecord rec;
    rec.config_id = row[c_cfg];
    rec.key = {static_cast<int>(csv::parse_int(row[c_p])), static_cast<int>(csv::parse_int(row[c_i])),
               static_cast<int>(csv::parse_int(row[c_d]))};
    const auto n = static_cast<std::size_t>(csv::parse_int(row[c_n]));
    for (std::size_t r = 1; r <= n; ++r) {
      rec.raw_precisions.push_back(csv::parse_double(row[t.column("run_" + std::to_string(r))]));
    }
    rec.median_log_precision = csv::parse_double(row[c_m]);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace aif::de
