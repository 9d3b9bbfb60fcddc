#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aif/parallel.hpp"
#include "aif/suite.hpp"

namespace aif::de {

enum class Strategy { Rand1Bin, Best1Bin, Rand2Bin, CurrentToBest1Bin };

std::string_view to_string(Strategy s);
/// Accepts "rand/1/bin", "best/1/bin", "rand/2/bin", "current-to-best/1/bin".
Strategy parse_strategy(std::string_view name);

struct DeConfig {
  std::string config_id;
  Strategy strategy = Strategy::Rand1Bin;
  double f = 0.5;   // differential weight, (0, 2]
  double cr = 0.9;  // crossover rate, [0, 1]
  int population_size = 40;

  /// Throws ConfigError on out-of-range parameters.
  void validate() const;
};

/// DE1..DE3 with population min(10 * dimension, 100).
std::vector<DeConfig> default_portfolio(int dimension);

inline constexpr double kPrecisionFloor = 1e-8;

using Objective = std::function<double(std::span<const double>)>;

struct RunOptions {
  bool record_trace = false;
  /// Called for every selection: (parent value, trial value, replaced).
  std::function<void(double, double, bool)> on_selection;
};

struct RunResult {
  double best_value = 0.0;
  std::vector<double> best_point;
  int evaluations = 0;
  std::vector<double> best_trace;  // best-so-far after each evaluation
};

/// Minimises objective over [-5, 5]^dimension with exactly `budget`
/// evaluations; the last generation is truncated when the budget runs out.
RunResult minimize(const Objective& objective, int dimension, const DeConfig& config, int budget,
                   std::uint64_t seed, const RunOptions& options = {});

/// Best precision reached on the instance.
double run_de(const suite::ProblemInstance& instance, const DeConfig& config, int budget,
              std::uint64_t seed);

struct PerformanceRecord {
  std::string config_id;
  InstanceKey key;
  std::vector<double> raw_precisions;
  double median_log_precision = 0.0;
};

/// log10(max(median(raw), 1e-8)).
double median_log_precision(std::span<const double> raw_precisions);

/// Runs seeds base_seed .. base_seed + n_runs - 1.
PerformanceRecord measure(const suite::ProblemInstance& instance, const DeConfig& config,
                          int budget, int n_runs, std::uint64_t base_seed,
                          const Execution& exec = Execution::serial());

/// Per-(config, instance) base seed drawn from the master seed.
std::uint64_t base_seed_for(std::uint64_t master_seed, std::string_view config_id,
                            const InstanceKey& key);

/// Every (config, instance) cell, config-major. Runs are parallel work items
/// with seeds fixed before dispatch.
std::vector<PerformanceRecord> measure_portfolio(std::span<const suite::ProblemInstance> instances,
                                                 std::span<const DeConfig> configs, int budget,
                                                 int n_runs, std::uint64_t master_seed,
                                                 const Execution& exec);

void write_performance_csv(std::ostream& out, std::span<const PerformanceRecord> records);
std::vector<PerformanceRecord> read_performance_csv(std::istream& in);

}  // namespace aif::de
