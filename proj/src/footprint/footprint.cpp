#include "aif/footprint.hpp"

#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/stats.hpp"

namespace aif::footprint {

std::string_view to_string(Scale s) { return s == Scale::Log ? "log" : "raw"; }

Scale parse_scale(std::string_view name) {
  if (name == "log") return Scale::Log;
  if (name == "raw") return Scale::Raw;
  throw ConfigError("unknown footprint scale '" + std::string(name) + "' (expected log or raw)");
}

void Thresholds::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("footprint p must lie in (0, 1]");
  if (!(eps_guard > 0.0)) throw ConfigError("footprint eps_guard must be positive");
  if (!std::isfinite(t)) throw ConfigError("footprint target t must be finite");
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::GoodGood:
      return "GoodGood";
    case Label::GoodPoor:
      return "GoodPoor";
    case Label::PoorGood:
      return "PoorGood";
    case Label::PoorPoor:
      return "PoorPoor";
  }
  return "?";
}

Label parse_label(std::string_view name) {
  for (auto l : kLabels) {
    if (to_string(l) == name) return l;
  }
  throw ContractViolation("unknown footprint label '" + std::string(name) + "'");
}

Label make_label(bool alg_good, bool ml_good) {
  if (alg_good) return ml_good ? Label::GoodGood : Label::GoodPoor;
  return ml_good ? Label::PoorGood : Label::PoorPoor;
}

bool algorithm_good(Label label) { return label == Label::GoodGood || label == Label::GoodPoor; }
bool model_good(Label label) { return label == Label::GoodGood || label == Label::PoorGood; }

double compute_target_t(std::span<const de::PerformanceRecord> train_records) {
  std::vector<double> v;
  v.reserve(train_records.size());
  for (const auto& r : train_records) v.push_back(r.median_log_precision);
  return compute_target_t(v);
}

double compute_target_t(std::span<const double> train_values) {
  if (train_values.empty()) throw ContractViolation("compute_target_t: no training records");
  return stats::median(train_values);
}

double relative_error(double truth, double predicted, double eps_guard) {
  return std::abs(predicted - truth) / std::max(std::abs(truth), eps_guard);
}

Label classify(double truth, double predicted, const Thresholds& thresholds) {
  if (!std::isfinite(truth) || !std::isfinite(predicted)) {
    throw ContractViolation("classify: non-finite input");
  }
  return make_label(truth <= thresholds.t,
                    relative_error(truth, predicted, thresholds.eps_guard) <= thresholds.p);
}

std::vector<FootprintAssignment> footprint_fold(std::span<const Prediction> predictions,
                                                const Thresholds& thresholds, int fold_id,
                                                models::ModelKind kind, Scale scale) {
  thresholds.validate();
  std::set<InstanceKey> seen;
  Thresholds effective = thresholds;
  if (scale == Scale::Raw) effective.t = std::pow(10.0, thresholds.t);

  std::vector<FootprintAssignment> out;
  out.reserve(predictions.size());
  for (const auto& pr : predictions) {
    if (!seen.insert(pr.key).second) {
      throw ContractViolation("footprint_fold: duplicate key " + to_string(pr.key));
    }
    double truth = pr.true_value;
    double pred = pr.predicted_value;
    if (scale == Scale::Raw) {
      truth = std::pow(10.0, truth);
      pred = std::pow(10.0, pred);
    }
    FootprintAssignment a;
    a.key = pr.key;
    a.true_value = pr.true_value;
    a.predicted_value = pr.predicted_value;
    a.relative_error = relative_error(truth, pred, effective.eps_guard);
    a.label = classify(truth, pred, effective);
    a.fold_id = fold_id;
    a.model_kind = kind;
    out.push_back(a);
  }
  return out;
}

TransitionReport sensitivity(std::span<const FootprintAssignment> before,
                             std::span<const FootprintAssignment> after) {
  using Id = std::tuple<int, models::ModelKind, InstanceKey>;
  std::map<Id, Label> later;
  for (const auto& a : after) {
    if (!later.emplace(Id{a.fold_id, a.model_kind, a.key}, a.label).second) {
      throw ContractViolation("sensitivity: duplicate assignment " + to_string(a.key));
    }
  }
  if (later.size() != before.size()) {
    throw ContractViolation("sensitivity: the two runs cover different instance sets");
  }
  TransitionReport report;
  for (const auto& a : before) {
    const auto it = later.find(Id{a.fold_id, a.model_kind, a.key});
    if (it == later.end()) {
      throw ContractViolation("sensitivity: " + to_string(a.key) + " missing from second run");
    }
    report.items.push_back({a.key, a.fold_id, a.model_kind, a.label, it->second});
    ++report.counts[static_cast<std::size_t>(a.label)][static_cast<std::size_t>(it->second)];
  }
  return report;
}

void write_assignments_csv(std::ostream& out, std::span<const FootprintAssignment> assignments) {
  csv::Writer w(out);
  w.row(std::string_view("fold_id"), std::string_view("model_kind"),
        std::string_view("problem_id"), std::string_view("instance_id"),
        std::string_view("dimension"), std::string_view("true"), std::string_view("predicted"),
        std::string_view("relative_error"), std::string_view("label"));
  for (const auto& a : assignments) {
    w.row(a.fold_id, models::to_string(a.model_kind), a.key.problem_id, a.key.instance_id,
          a.key.dimension, a.true_value, a.predicted_value, a.relative_error, to_string(a.label));
  }
}

std::vector<FootprintAssignment> read_assignments_csv(std::istream& in) {
  const auto t = csv::read(in);
  const auto c_fold = t.column("fold_id");
  const auto c_kind = t.column("model_kind");
  const auto c_p = t.column("problem_id");
  const auto c_i = t.column("instance_id");
  const auto c_d = t.column("dimension");
  const auto c_true = t.column("true");
  const auto c_pred = t.column("predicted");
  const auto c_err = t.column("relative_error");
  const auto c_label = t.column("label");
  std::vector<FootprintAssignment> out;
  for (const auto& r : t.rows) {
    FootprintAssignment a;
    a.fold_id = static_cast<int>(csv::parse_int(r[c_fold]));
    a.model_kind = models::parse_model_kind(r[c_kind]);
    a.key = {static_cast<int>(csv::parse_int(r[c_p])), static_cast<int>(csv::parse_int(r[c_i])),
             static_cast<int>(csv::parse_int(r[c_d]))};
    a.true_value = csv::parse_double(r[c_true]);
    a.predicted_value = csv::parse_double(r[c_pred]);
    a.relative_error = csv::parse_double(r[c_err]);
    a.label = parse_label(r[c_label]);
    out.push_back(a);
  }
  return out;
}

void write_transitions_csv(std::ostream& out, const TransitionReport& report) {
  csv::Writer w(out);
  w.row(std::string_view("fold_id"), std::string_view("model_kind"),
        std::string_view("problem_id"), std::string_view("instance_id"),
        std::string_view("dimension"), std::string_view("from"), std::string_view("to"));
  for (const auto& tr : report.items) {
    w.row(tr.fold_id, models::to_string(tr.model_kind), tr.key.problem_id, tr.key.instance_id,
          tr.key.dimension, to_string(tr.from), to_string(tr.to));
  }
}

}  // namespace aif::footprint
