#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "aif/csv.hpp"
#include "aif/viz.hpp"

namespace aif::viz {

std::vector<DistributionRow> distribution_rows(
    std::span<const footprint::FootprintAssignment> assignments) {
  std::map<std::pair<models::ModelKind, int>, std::array<std::set<int>, 4>> cells;
  for (const auto& a : assignments) {
    cells[{a.model_kind, a.fold_id}][static_cast<std::size_t>(a.label)].insert(a.key.problem_id);
  }
  std::vector<DistributionRow> rows;
  for (const auto& [id, sets] : cells) {
    DistributionRow r;
    r.model_kind = id.first;
    r.fold_id = id.second;
    for (std::size_t l = 0; l < 4; ++l) r.problems[l].assign(sets[l].begin(), sets[l].end());
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_problem_list(std::span<const int> problems) {
  if (problems.empty()) return "–";
  std::string out;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(problems[i]);
  }
  return out;
}

std::string distribution_latex_row(const DistributionRow& row) {
  std::string out = std::string(models::display_label(row.model_kind)) + " & " +
                    std::to_string(row.fold_id);
  for (const auto& list : row.problems) out += " & " + format_problem_list(list);
  return out + " \\\\";
}

std::string distribution_table_text(std::span<const DistributionRow> rows) {
  std::string out = "model | fold | (good, good) | (good, poor) | (poor, good) | (poor, poor)\n";
  for (const auto& r : rows) {
    out += std::string(models::display_label(r.model_kind)) + " | " + std::to_string(r.fold_id);
    for (const auto& list : r.problems) out += " | " + format_problem_list(list);
    out += '\n';
  }
  return out;
}

void write_distribution_csv(std::ostream& out, std::span<const DistributionRow> rows) {
  csv::Writer w(out);
  w.row(std::string_view("model_kind"), std::string_view("fold_id"),
        std::string_view("good_good"), std::string_view("good_poor"),
        std::string_view("poor_good"), std::string_view("poor_poor"));
  for (const auto& r : rows) {
    w.field(models::to_string(r.model_kind)).field(r.fold_id);
    for (const auto& list : r.problems) {
      std::string cell;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) cell += ' ';
        cell += std::to_string(list[i]);
      }
      w.field(std::string_view(cell));
    }
    w.end_row();
  }
}

}  // namespace aif::viz
