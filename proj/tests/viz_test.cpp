#include <cstdlib>
#include <regex>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "aif/errors.hpp"
#include "aif/viz.hpp"
#include "support.hpp"

namespace aif::viz {
namespace {

using footprint::FootprintAssignment;
using footprint::Label;
using ::testing::HasSubstr;
using ::testing::Not;

const std::filesystem::path kGolden = AIF_GOLDEN_DIR;

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

bool well_formed(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error&) {
    return false;
  }
  return tree.count("svg") == 1;
}

// Compares against a frozen file; AIF_UPDATE_GOLDEN=1 rewrites it.
void expect_golden(const std::string& name, const std::string& actual) {
  const auto path = kGolden / name;
  if (const char* update = std::getenv("AIF_UPDATE_GOLDEN"); update && std::string(update) == "1") {
    testing::spit(path, actual);
  }
  ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden file " << path;
  EXPECT_EQ(testing::slurp(path), actual) << "golden mismatch: " << name;
}

Embedding2D toy_embedding() {
  Embedding2D e;
  e.method = "pca";
  e.keys = {{1, 1, 2}, {2, 1, 2}, {3, 1, 2}, {4, 1, 2}};
  e.coords = {{{0.0, 0.0}}, {{1.0, 0.5}}, {{-1.0, 2.0}}, {{0.5, -1.5}}};
  return e;
}

std::vector<FootprintAssignment> toy_assignments() {
  std::vector<FootprintAssignment> out;
  for (int i = 0; i < 4; ++i) {
    FootprintAssignment a;
    a.key = {i + 1, 1, 2};
    a.label = footprint::kLabels[static_cast<std::size_t>(i)];
    a.fold_id = 1;
    out.push_back(a);
  }
  return out;
}

ela::FeatureMatrix toy_features() {
  ela::FeatureMatrix m;
  m.names = {"alpha", "beta", "flat"};
  m.keys = toy_embedding().keys;
  m.values.resize(4, 3);
  m.values << 1.0, 10.0, 7.0,  //
      3.0, -2.0, 7.0,          //
      2.0, 0.0, 7.0,           //
      5.0, 4.0, 7.0;
  return m;
}

TEST(EmbeddingTest, OnePairPerRow) {
  Rng rng(1);
  const Matrix rows = testing::random_matrix(rng, 12, 5);
  std::vector<InstanceKey> keys;
  for (int i = 0; i < 12; ++i) keys.push_back({i + 1, 1, 5});
  const auto e = embed_2d(rows, keys);
  EXPECT_EQ(e.method, "pca");
  EXPECT_EQ(e.coords.size(), 12u);
  EXPECT_EQ(e.keys, keys);
  EXPECT_THROW(embed_2d(rows.topRows(2), std::span(keys).first(2)), ContractViolation);
  EXPECT_THROW(e.at({99, 1, 5}), ContractViolation);
}

TEST(EmbeddingTest, CollinearRowsHaveZeroSecondAxis) {
  Matrix rows(6, 3);
  std::vector<InstanceKey> keys;
  for (int i = 0; i < 6; ++i) {
    const double s = 0.7 * i - 1.3;
    rows.row(i) << 1.0 + s, 2.0 - 2.0 * s, 0.5 * s;
    keys.push_back({i + 1, 1, 3});
  }
  const auto e = embed_2d(rows, keys);
  for (const auto& c : e.coords) EXPECT_NEAR(c[1], 0.0, 1e-9);
  // First coordinate is distance along the line, up to orientation.
  EXPECT_NEAR(std::abs(e.coords[1][0] - e.coords[0][0]), 0.7 * std::sqrt(1.0 + 4.0 + 0.25), 1e-9);
}

TEST(EmbeddingTest, DuplicateRowsShareCoordinates) {
  Rng rng(2);
  Matrix rows = testing::random_matrix(rng, 8, 4);
  rows.row(5) = rows.row(2);
  std::vector<InstanceKey> keys;
  for (int i = 0; i < 8; ++i) keys.push_back({i + 1, 1, 4});
  const auto e = embed_2d(rows, keys);
  EXPECT_EQ(e.coords[5], e.coords[2]);
}

TEST(EmbeddingTest, ZeroVarianceCollapsesToOrigin) {
  const Matrix rows = Matrix::Constant(4, 3, 2.5);
  std::vector<InstanceKey> keys{{1, 1, 3}, {2, 1, 3}, {3, 1, 3}, {4, 1, 3}};
  for (const auto& c : embed_2d(rows, keys).coords) {
    EXPECT_EQ(c[0], 0.0);
    EXPECT_EQ(c[1], 0.0);
  }
}

TEST(FootprintPlotTest, MarkerAndColourFollowLabels) {
  const auto svg = footprint_plot_svg(toy_embedding(), toy_assignments(), "toy");
  EXPECT_EQ(count(svg, "<circle class=\"marker"), 2);
  EXPECT_EQ(count(svg, "<path class=\"marker cross"), 2);
  EXPECT_EQ(count(svg, "stroke=\"#2166ac\""), 2);
  EXPECT_EQ(count(svg, "stroke=\"#e6b800\""), 2);
  EXPECT_EQ(count(svg, "class=\"annotation\""), 4);
  EXPECT_THAT(svg, HasSubstr("toy [pca]"));
  EXPECT_TRUE(well_formed(svg));
}

TEST(FootprintPlotTest, LabelsDoNotDependOnEmbedding) {
  const auto a = footprint_plot_svg(toy_embedding(), toy_assignments(), "toy");
  auto moved = toy_embedding();
  for (auto& c : moved.coords) c = {c[1] * 3.0, -c[0]};
  const auto b = footprint_plot_svg(moved, toy_assignments(), "toy");
  const std::regex marker(R"re(class="(marker[^"]*)"[^>]*stroke="(#[0-9a-f]+)")re");
  auto classes = [&](const std::string& s) {
    std::vector<std::string> out;
    for (std::sregex_iterator it(s.begin(), s.end(), marker), end; it != end; ++it) {
      out.push_back((*it)[1].str() + (*it)[2].str());
    }
    return out;
  };
  EXPECT_EQ(classes(a), classes(b));
  EXPECT_EQ(classes(a).size(), 4u);
}

TEST(FootprintPlotTest, MissingAssignmentThrows) {
  auto assignments = toy_assignments();
  assignments.pop_back();
  EXPECT_THROW(footprint_plot_svg(toy_embedding(), assignments, "toy"), ContractViolation);
}

TEST(FootprintPlotTest, MatchesGolden) {
  expect_golden("footprint_toy.svg", footprint_plot_svg(toy_embedding(), toy_assignments(), "toy"));
}

class BeeswarmTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(3);
    for (int f = 0; f < 12; ++f) portfolio_.feature_names.push_back("feat" + std::to_string(f));
    portfolio_.importance.assign(12, 0.0);
    values_.names = portfolio_.feature_names;
    values_.values.resize(24, 12);
    for (int i = 0; i < 24; ++i) {
      ShapMetaRepresentation rep;
      rep.key = {i + 1, 1, 5};
      for (int f = 0; f < 12; ++f) rep.phi.push_back(rng.uniform(-1.0, 1.0) * (f + 1));
      reps_.push_back(rep);
      values_.keys.push_back(rep.key);
      for (int f = 0; f < 12; ++f) values_.values(i, f) = f == 11 ? 3.0 : rng.uniform(0.0, 10.0);
    }
  }
  using ShapMetaRepresentation = shap::ShapMetaRepresentation;
  std::vector<ShapMetaRepresentation> reps_;
  shap::FeaturePortfolio portfolio_;
  ela::FeatureMatrix values_;
};

TEST_F(BeeswarmTest, RowCountIsTopKTimesInstances) {
  const auto rows = beeswarm_rows(reps_, portfolio_, 10, values_);
  EXPECT_EQ(rows.size(), 240u);
  std::stringstream csv;
  write_beeswarm_csv(csv, rows);
  EXPECT_EQ(count(csv.str(), "\n"), 241);
  EXPECT_THROW(beeswarm_rows(reps_, portfolio_, 13, values_), ContractViolation);
}

TEST_F(BeeswarmTest, FirstRankHasLargestMeanAbsoluteAttribution) {
  const auto rows = beeswarm_rows(reps_, portfolio_, 10, values_);
  const auto imp = shap::global_importance(reps_, portfolio_.feature_names);
  EXPECT_EQ(rows.front().feature, imp.front().name);
  EXPECT_EQ(rows.front().rank, 1);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].rank, rows[i - 1].rank);
  for (const auto& r : rows) {
    EXPECT_GE(r.normalized_value, 0.0);
    EXPECT_LE(r.normalized_value, 1.0);
  }
}

TEST_F(BeeswarmTest, ConstantFeatureNormalisesToHalf) {
  const auto rows = beeswarm_rows(reps_, portfolio_, 12, values_);
  int seen = 0;
  for (const auto& r : rows) {
    if (r.feature == "feat11") {
      EXPECT_EQ(r.normalized_value, 0.5);
      ++seen;
    }
  }
  EXPECT_EQ(seen, 24);
  EXPECT_TRUE(well_formed(beeswarm_svg(rows, "swarm")));
}

TEST(FeatureDistributionTest, EndpointsMapToScaleEnds) {
  const auto svg = feature_distribution_svg(toy_embedding(), "beta", toy_features());
  EXPECT_EQ(count(svg, "class=\"point\""), 4);
  // beta: 10 is the max (row 1), -2 the min (row 2).
  const std::regex point(R"re(<circle class="point"[^>]*fill="(#[0-9a-f]+)" data-value="([0-9.]+)")re");
  std::vector<std::pair<std::string, std::string>> points;
  for (std::sregex_iterator it(svg.begin(), svg.end(), point), end; it != end; ++it) {
    points.emplace_back((*it)[1].str(), (*it)[2].str());
  }
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[0], (std::pair<std::string, std::string>{"#fde725", "1.000"}));
  EXPECT_EQ(points[1], (std::pair<std::string, std::string>{"#440154", "0.000"}));
  EXPECT_TRUE(well_formed(svg));
}

TEST(FeatureDistributionTest, PlotsShareEmbeddingPositions) {
  const std::regex pos(R"re(cx="([-0-9.]+)" cy="([-0-9.]+)")re");
  auto positions = [&](const std::string& s) {
    std::vector<std::string> out;
    for (std::sregex_iterator it(s.begin(), s.end(), pos), end; it != end; ++it) out.push_back(it->str());
    return out;
  };
  EXPECT_EQ(positions(feature_distribution_svg(toy_embedding(), "alpha", toy_features())),
            positions(feature_distribution_svg(toy_embedding(), "beta", toy_features())));
}

TEST(FeatureDistributionTest, UnknownFeatureThrows) {
  EXPECT_THROW(feature_distribution_svg(toy_embedding(), "gamma", toy_features()), ContractViolation);
}

TEST(FeatureDistributionTest, MatchesGolden) {
  expect_golden("feature_toy.svg", feature_distribution_svg(toy_embedding(), "alpha", toy_features()));
}

std::vector<FootprintAssignment> fold_one_rf() {
  const std::array<std::vector<int>, 4> members = {
      std::vector<int>{16, 19, 20, 21, 22}, std::vector<int>{1, 2, 5, 14, 17, 18, 23},
      std::vector<int>{3, 4, 6, 7, 8, 9, 10, 11, 12, 15, 24}, std::vector<int>{13}};
  std::vector<FootprintAssignment> out;
  for (std::size_t l = 0; l < 4; ++l) {
    for (int p : members[l]) {
      FootprintAssignment a;
      a.key = {p, 1, 10};
      a.label = footprint::kLabels[l];
      a.fold_id = 1;
      out.push_back(a);
    }
  }
  return out;
}

TEST(DistributionTableTest, ReproducesPublishedRowLayout) {
  const auto rows = distribution_rows(fold_one_rf());
  ASSERT_EQ(rows.size(), 1u);
  auto expected = testing::slurp(kGolden / "table_fold1_rf.tex");
  while (!expected.empty() && expected.back() == '\n') expected.pop_back();
  EXPECT_EQ(distribution_latex_row(rows[0]), expected);
  EXPECT_THAT(distribution_table_text(rows), HasSubstr("| 16, 19, 20, 21, 22 |"));
}

TEST(DistributionTableTest, EmptyColumnsRenderAsDash) {
  std::vector<FootprintAssignment> all;
  for (int p = 1; p <= 24; ++p) {
    FootprintAssignment a;
    a.key = {p, 2, 5};
    a.fold_id = 2;
    a.label = Label::GoodGood;
    all.push_back(a);
  }
  const auto rows = distribution_rows(all);
  std::string ids;
  for (int p = 1; p <= 24; ++p) ids += (p > 1 ? ", " : "") + std::to_string(p);
  EXPECT_EQ(distribution_table_text(rows),
            "model | fold | (good, good) | (good, poor) | (poor, good) | (poor, poor)\n"
            "RF | 2 | " + ids + " | – | – | –\n");
}

TEST(DistributionTableTest, EveryProblemInExactlyOneColumn) {
  Rng rng(4);
  std::vector<FootprintAssignment> all;
  for (int fold = 1; fold <= 3; ++fold) {
    for (int p = 1; p <= 24; ++p) {
      FootprintAssignment a;
      a.key = {p, fold, 5};
      a.fold_id = fold;
      a.model_kind = fold == 3 ? models::ModelKind::Knn : models::ModelKind::RandomForest;
      a.label = footprint::kLabels[rng.index(4)];
      all.push_back(a);
    }
  }
  const auto rows = distribution_rows(all);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].model_kind, models::ModelKind::Knn);
  for (const auto& r : rows) {
    std::vector<int> merged;
    for (const auto& list : r.problems) {
      EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
      merged.insert(merged.end(), list.begin(), list.end());
    }
    std::sort(merged.begin(), merged.end());
    ASSERT_EQ(merged.size(), 24u);
    for (int p = 1; p <= 24; ++p) EXPECT_EQ(merged[static_cast<std::size_t>(p - 1)], p);
  }
  std::stringstream csv;
  write_distribution_csv(csv, rows);
  EXPECT_THAT(csv.str(), Not(HasSubstr(", ")));
}

}  // namespace
}  // namespace aif::viz
