#include <algorithm>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/viz.hpp"
#include "viz/svg.hpp"

namespace aif::viz {
namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr double kLeft = 60.0;
constexpr double kRight = 500.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 430.0;

struct Bounds {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

void frame(std::ostringstream& out, std::string_view x_label, std::string_view y_label) {
  using svg::num;
  out << "<rect class=\"frame\" x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
      << num(kRight - kLeft) << "\" height=\"" << num(kBottom - kTop)
      << "\" fill=\"none\" stroke=\"#444444\"/>\n"
      << "<text x=\"" << num(0.5 * (kLeft + kRight)) << "\" y=\"" << num(kBottom + 30)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << svg::escape(x_label) << "</text>\n"
      << "<text x=\"15\" y=\"" << num(0.5 * (kTop + kBottom))
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 "
      << num(0.5 * (kTop + kBottom)) << ")\">" << svg::escape(y_label) << "</text>\n";
}

std::pair<svg::Axis, svg::Axis> embedding_axes(const Embedding2D& e) {
  Bounds u, v;
  for (const auto& c : e.coords) {
    u.add(c[0]);
    v.add(c[1]);
  }
  return {svg::padded_axis(u.lo, u.hi, kLeft, kRight), svg::padded_axis(v.lo, v.hi, kBottom, kTop)};
}

/// Min-max normalisation over the given values; constant input maps to 0.5.
std::vector<double> normalise(std::span<const double> values) {
  Bounds b;
  for (double v : values) b.add(v);
  std::vector<double> out(values.size(), 0.5);
  if (b.hi > b.lo) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - b.lo) / (b.hi - b.lo);
  }
  return out;
}

}  // namespace

std::string footprint_plot_svg(const Embedding2D& embedding,
                               std::span<const footprint::FootprintAssignment> assignments,
                               const std::string& title) {
  using svg::num;
  std::map<InstanceKey, footprint::Label> labels;
  for (const auto& a : assignments) labels[a.key] = a.label;

  std::ostringstream out;
  svg::open(out, kWidth, kHeight, title + " [" + embedding.method + "]");
  frame(out, embedding.method + " 1", embedding.method + " 2");
  const auto [ux, vy] = embedding_axes(embedding);

  for (std::size_t i = 0; i < embedding.keys.size(); ++i) {
    const auto& key = embedding.keys[i];
    const auto it = labels.find(key);
    if (it == labels.end()) throw ContractViolation("footprint plot: no assignment for " + to_string(key));
    const bool alg = footprint::algorithm_good(it->second);
    const bool ml = footprint::model_good(it->second);
    const double x = ux(embedding.coords[i][0]);
    const double y = vy(embedding.coords[i][1]);
    const char* colour = alg ? svg::kBlue : svg::kYellow;
    const std::string cls = std::string(alg ? "alg-good" : "alg-poor") + (ml ? " ml-good" : " ml-poor");
    if (ml) {
      out << "<circle class=\"marker " << cls << "\" cx=\"" << num(x) << "\" cy=\"" << num(y)
          << "\" r=\"5.000\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    } else {
      out << "<path class=\"marker cross " << cls << "\" d=\"M " << num(x - 4) << ' ' << num(y - 4)
          << " L " << num(x + 4) << ' ' << num(y + 4) << " M " << num(x - 4) << ' ' << num(y + 4)
          << " L " << num(x + 4) << ' ' << num(y - 4) << "\" stroke=\"" << colour
          << "\" stroke-width=\"2\"/>\n";
    }
    out << "<text class=\"annotation\" x=\"" << num(x + 6) << "\" y=\"" << num(y - 6)
        << "\" font-size=\"9\">" << key.problem_id << "</text>\n";
  }

  // Legend uses swatches and glyph text so marker counts stay exact.
  const double lx = kRight + 15;
  out << "<text x=\"" << num(lx) << "\" y=\"" << num(kTop + 10) << "\" font-size=\"11\">algorithm</text>\n"
      << "<rect class=\"legend\" x=\"" << num(lx) << "\" y=\"" << num(kTop + 18)
      << "\" width=\"10.000\" height=\"10.000\" fill=\"" << svg::kBlue << "\"/>\n"
      << "<text x=\"" << num(lx + 15) << "\" y=\"" << num(kTop + 27) << "\" font-size=\"10\">good</text>\n"
      << "<rect class=\"legend\" x=\"" << num(lx) << "\" y=\"" << num(kTop + 34)
      << "\" width=\"10.000\" height=\"10.000\" fill=\"" << svg::kYellow << "\"/>\n"
      << "<text x=\"" << num(lx + 15) << "\" y=\"" << num(kTop + 43) << "\" font-size=\"10\">poor</text>\n"
      << "<text x=\"" << num(lx) << "\" y=\"" << num(kTop + 65) << "\" font-size=\"11\">model</text>\n"
      << "<text x=\"" << num(lx) << "\" y=\"" << num(kTop + 80) << "\" font-size=\"10\">O good</text>\n"
      << "<text x=\"" << num(lx) << "\" y=\"" << num(kTop + 95) << "\" font-size=\"10\">X poor</text>\n";
  svg::close(out);
  return out.str();
}

std::vector<BeeswarmRow> beeswarm_rows(std::span<const shap::ShapMetaRepresentation> reps,
                                       const shap::FeaturePortfolio& portfolio, int top_k,
                                       const ela::FeatureMatrix& values) {
  if (top_k < 1 || top_k > portfolio.size()) {
    throw ContractViolation("beeswarm: top_k must lie in 1..portfolio size");
  }
  const auto ranking = shap::global_importance(reps, portfolio.feature_names);
  std::vector<BeeswarmRow> rows;
  rows.reserve(static_cast<std::size_t>(top_k) * reps.size());
  for (int r = 0; r < top_k; ++r) {
    const auto& name = ranking[static_cast<std::size_t>(r)].name;
    const auto phi_col = static_cast<std::size_t>(
        std::find(portfolio.feature_names.begin(), portfolio.feature_names.end(), name) -
        portfolio.feature_names.begin());
    const auto value_col = static_cast<Eigen::Index>(values.column_of(name));
    std::vector<double> raw;
    raw.reserve(reps.size());
    for (const auto& rep : reps) {
      raw.push_back(values.values(static_cast<Eigen::Index>(values.row_of(rep.key)), value_col));
    }
    const auto norm = normalise(raw);
    for (std::size_t i = 0; i < reps.size(); ++i) {
      rows.push_back({name, r + 1, reps[i].key, reps[i].phi[phi_col], norm[i]});
    }
  }
  return rows;
}

void write_beeswarm_csv(std::ostream& out, std::span<const BeeswarmRow> rows) {
  csv::Writer w(out);
  w.row(std::string_view("feature"), std::string_view("rank"), std::string_view("problem_id"),
        std::string_view("instance_id"), std::string_view("dimension"), std::string_view("phi"),
        std::string_view("normalized_value"));
  for (const auto& r : rows) {
    w.row(std::string_view(r.feature), r.rank, r.key.problem_id, r.key.instance_id,
          r.key.dimension, r.phi, r.normalized_value);
  }
}

std::string beeswarm_svg(std::span<const BeeswarmRow> rows, const std::string& title) {
  using svg::num;
  int ranks = 0;
  Bounds phi;
  phi.add(0.0);
  for (const auto& r : rows) {
    ranks = std::max(ranks, r.rank);
    phi.add(r.phi);
  }
  constexpr double kLabelLeft = 200.0;
  std::ostringstream out;
  svg::open(out, kWidth + 120, kHeight, title);
  const svg::Axis ax = svg::padded_axis(phi.lo, phi.hi, kLabelLeft, kRight + 100);
  const double band = ranks > 0 ? (kBottom - kTop) / ranks : 0.0;
  out << "<line x1=\"" << num(ax(0.0)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(ax(0.0))
      << "\" y2=\"" << num(kBottom) << "\" stroke=\"#999999\"/>\n"
      << "<text x=\"" << num(0.5 * (kLabelLeft + kRight + 100)) << "\" y=\"" << num(kBottom + 30)
      << "\" text-anchor=\"middle\" font-size=\"12\">attribution</text>\n";
  std::vector<int> seen(static_cast<std::size_t>(ranks) + 1, 0);
  for (const auto& r : rows) {
    const double centre = kTop + (r.rank - 0.5) * band;
    if (seen[static_cast<std::size_t>(r.rank)]++ == 0) {
      out << "<text class=\"feature\" x=\"" << num(kLabelLeft - 8) << "\" y=\"" << num(centre + 4)
          << "\" text-anchor=\"end\" font-size=\"10\">" << svg::escape(r.feature) << "</text>\n";
    }
    // Deterministic vertical spread inside the band.
    const int slot = (seen[static_cast<std::size_t>(r.rank)] - 1) % 9 - 4;
    out << "<circle class=\"swarm\" cx=\"" << num(ax(r.phi)) << "\" cy=\""
        << num(centre + slot * band / 12.0) << "\" r=\"3.000\" fill=\"" << svg::ramp(r.normalized_value)
        << "\"/>\n";
  }
  svg::colour_bar(out, kRight + 130, kTop + 20, 200, "feature value");
  svg::close(out);
  return out.str();
}

std::string feature_distribution_svg(const Embedding2D& embedding, const std::string& feature,
                                     const ela::FeatureMatrix& values) {
  using svg::num;
  if (std::find(values.names.begin(), values.names.end(), feature) == values.names.end()) {
    throw ContractViolation("feature distribution: unknown feature '" + feature + "'");
  }
  const auto col = static_cast<Eigen::Index>(values.column_of(feature));
  std::vector<double> raw;
  raw.reserve(embedding.keys.size());
  for (const auto& k : embedding.keys) {
    raw.push_back(values.values(static_cast<Eigen::Index>(values.row_of(k)), col));
  }
  const auto norm = normalise(raw);

  std::ostringstream out;
  svg::open(out, kWidth, kHeight, feature + " [" + embedding.method + "]");
  frame(out, embedding.method + " 1", embedding.method + " 2");
  const auto [ux, vy] = embedding_axes(embedding);
  for (std::size_t i = 0; i < embedding.keys.size(); ++i) {
    out << "<circle class=\"point\" cx=\"" << num(ux(embedding.coords[i][0])) << "\" cy=\""
        << num(vy(embedding.coords[i][1])) << "\" r=\"5.000\" fill=\"" << svg::ramp(norm[i])
        << "\" data-value=\"" << num(norm[i]) << "\"/>\n";
  }
  svg::colour_bar(out, kRight + 20, kTop + 20, 200, "normalised value");
  svg::close(out);
  return out.str();
}

}  // namespace aif::viz
