#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "aif/de.hpp"
#include "aif/models.hpp"
#include "aif/types.hpp"

namespace aif::footprint {

/// Log: classify median log10 precision directly. Raw: classify 10^value.
enum class Scale { Log, Raw };

std::string_view to_string(Scale s);
Scale parse_scale(std::string_view name);

struct Thresholds {
  double t = 0.0;  // algorithm solves an instance iff true value <= t (log scale)
  double p = 0.15;
  double eps_guard = 1e-6;

  /// Throws ConfigError unless p in (0, 1], eps_guard > 0 and t finite.
  void validate() const;
};

/// First word: algorithm axis. Second word: model axis.
enum class Label { GoodGood, GoodPoor, PoorGood, PoorPoor };

inline constexpr std::array<Label, 4> kLabels = {Label::GoodGood, Label::GoodPoor, Label::PoorGood,
                                                 Label::PoorPoor};

std::string_view to_string(Label label);
Label parse_label(std::string_view name);
Label make_label(bool algorithm_good, bool model_good);
bool algorithm_good(Label label);
bool model_good(Label label);

/// Median of the training median_log_precision values.
double compute_target_t(std::span<const de::PerformanceRecord> train_records);
double compute_target_t(std::span<const double> train_values);

/// |predicted - truth| / max(|truth|, eps_guard).
double relative_error(double truth, double predicted, double eps_guard);

/// Both comparisons are inclusive: equality is Good.
Label classify(double truth, double predicted, const Thresholds& thresholds);

struct Prediction {
  InstanceKey key;
  double true_value = 0.0;       // median log10 precision
  double predicted_value = 0.0;  // same scale
};

struct FootprintAssignment {
  InstanceKey key;
  double true_value = 0.0;
  double predicted_value = 0.0;
  double relative_error = 0.0;
  Label label = Label::PoorPoor;
  int fold_id = 0;
  models::ModelKind model_kind = models::ModelKind::RandomForest;
};

/// One assignment per prediction, in input order. In raw scale the values
/// and t are mapped through 10^x before classification; stored values stay
/// on the log scale. Duplicate keys throw ContractViolation.
std::vector<FootprintAssignment> footprint_fold(std::span<const Prediction> predictions,
                                                const Thresholds& thresholds, int fold_id,
                                                models::ModelKind kind,
                                                Scale scale = Scale::Log);

struct Transition {
  InstanceKey key;
  int fold_id = 0;
  models::ModelKind model_kind = models::ModelKind::RandomForest;
  Label from = Label::GoodGood;
  Label to = Label::GoodGood;
};

struct TransitionReport {
  std::vector<Transition> items;
  std::array<std::array<int, 4>, 4> counts{};  // [from][to]

  int count(Label from, Label to) const {
    return counts[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }
};

/// Pairs assignments by (fold, model, key); both sides must cover the same set.
TransitionReport sensitivity(std::span<const FootprintAssignment> before,
                             std::span<const FootprintAssignment> after);

/// Columns: fold_id, model_kind, problem_id, instance_id, dimension, true,
/// predicted, relative_error, label.
void write_assignments_csv(std::ostream& out, std::span<const FootprintAssignment> assignments);
std::vector<FootprintAssignment> read_assignments_csv(std::istream& in);

/// Columns: fold_id, model_kind, problem_id, instance_id, dimension, from, to.
void write_transitions_csv(std::ostream& out, const TransitionReport& report);

}  // namespace aif::footprint
