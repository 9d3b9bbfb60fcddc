#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "aif/types.hpp"

namespace aif::suite {

inline constexpr double kLowerBound = -5.0;
inline constexpr double kUpperBound = 5.0;
inline constexpr int kNumProblems = 24;

struct SuiteConfig {
  std::vector<int> problem_ids;
  std::vector<int> instance_ids;
  int dimension = 10;
};

/// One transformed benchmark function. The minimiser is the instance shift
/// and its value is f_offset; instances are immutable and cheap to copy.
class ProblemInstance {
 public:
  ProblemInstance(int problem_id, int instance_id, int dimension);

  const InstanceKey& key() const;
  int problem_id() const { return key().problem_id; }
  int instance_id() const { return key().instance_id; }
  int dimension() const { return key().dimension; }

  /// Search-space translation; equal to the optimum location.
  std::span<const double> shift() const;
  double f_offset() const;
  std::uint64_t seed() const;

  /// Throws ContractViolation when x.size() != dimension().
  double evaluate(std::span<const double> x) const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

/// One instance per (problem, instance) pair, problem-major order.
std::vector<ProblemInstance> make_suite(const SuiteConfig& config);

/// f_value - f_offset, with rounding-level negatives clamped to 0.
double precision(const ProblemInstance& instance, double f_value);

std::string_view function_name(int problem_id);

/// Columns: problem_id, instance_id, dimension, f_offset, shift_1..shift_D.
void write_manifest(std::ostream& out, std::span<const ProblemInstance> instances);

/// Reads the keys back out of a manifest written by write_manifest.
std::vector<InstanceKey> read_manifest_keys(std::istream& in);

}  // namespace aif::suite
