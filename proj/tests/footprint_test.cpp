#include <map>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "aif/errors.hpp"
#include "aif/footprint.hpp"
#include "support.hpp"

namespace aif::footprint {
namespace {

using models::ModelKind;

// Independent restatement of the labelling rule.
Label oracle(double truth, double pred, double t, double p, double eps) {
  const bool alg = truth <= t;
  const bool ml = std::abs(pred - truth) / std::max(std::abs(truth), eps) <= p;
  if (alg) return ml ? Label::GoodGood : Label::GoodPoor;
  return ml ? Label::PoorGood : Label::PoorPoor;
}

std::vector<Prediction> random_predictions(Rng& rng, int n) {
  std::vector<Prediction> out;
  for (int i = 0; i < n; ++i) {
    const double truth = rng.uniform(-8.0, 4.0);
    out.push_back({{i / 5 + 1, i % 5 + 1, 5}, truth, truth + rng.uniform(-2.0, 2.0)});
  }
  return out;
}

TEST(ClassifyTest, WorkedExamples) {
  const Thresholds th{1.0, 0.15};
  EXPECT_EQ(classify(0.5, 0.56, th), Label::GoodGood);
  EXPECT_EQ(classify(2.0, 2.1, th), Label::PoorGood);
  EXPECT_EQ(classify(0.5, 0.9, th), Label::GoodPoor);
  EXPECT_EQ(classify(2.0, 3.0, th), Label::PoorPoor);
  EXPECT_NEAR(relative_error(0.5, 0.56, 1e-6), 0.12, 1e-12);
}

TEST(ClassifyTest, BoundariesAreGood) {
  const Thresholds th{4.0, 0.125};
  EXPECT_EQ(classify(4.0, 4.5, th), Label::GoodGood);  // truth == t, rel err == p
  EXPECT_EQ(classify(4.0, 4.5 + 1e-9, th), Label::GoodPoor);
  EXPECT_EQ(classify(4.0 + 1e-12, 4.0, th), Label::PoorGood);
  EXPECT_EQ(classify(-4.0, -3.5, th), Label::GoodGood);
}

TEST(ClassifyTest, GuardsSmallTruth) {
  const Thresholds th{0.0, 0.15, 1e-6};
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-7, 1e-6), 0.1);
  EXPECT_EQ(classify(0.0, 1e-7, th), Label::GoodGood);
  EXPECT_THROW(classify(std::nan(""), 0.0, th), ContractViolation);
  EXPECT_THROW(classify(0.0, INFINITY, th), ContractViolation);
}

TEST(ClassifyTest, AgreesWithOracleOnGrid) {
  int cases = 0;
  for (double t : {-4.0, 0.0, 1.0}) {
    for (double p : {0.05, 0.15, 0.5}) {
      for (int a = -20; a <= 20; ++a) {
        for (int b = -20; b <= 20; ++b) {
          const double truth = 0.25 * a;
          const double pred = truth + 0.03125 * b;
          ASSERT_EQ(classify(truth, pred, {t, p}), oracle(truth, pred, t, p, 1e-6));
          ++cases;
        }
      }
    }
  }
  EXPECT_EQ(cases, 9 * 41 * 41);
}

TEST(LabelTest, AxesAndNamesAreConsistent) {
  for (auto l : kLabels) {
    EXPECT_EQ(make_label(algorithm_good(l), model_good(l)), l);
    EXPECT_EQ(parse_label(to_string(l)), l);
  }
  EXPECT_EQ(to_string(Label::GoodPoor), "GoodPoor");
  EXPECT_THROW(parse_label("Good"), ContractViolation);
}

TEST(TargetTest, IsMedianOfTrainingValues) {
  EXPECT_EQ(compute_target_t(std::vector<double>{-2.0, 0.0, 4.0}), 0.0);
  EXPECT_EQ(compute_target_t(std::vector<double>{1.0, 3.0}), 2.0);
  std::vector<de::PerformanceRecord> recs(3);
  recs[0].median_log_precision = -8.0;
  recs[1].median_log_precision = 1.0;
  recs[2].median_log_precision = -1.0;
  EXPECT_EQ(compute_target_t(recs), -1.0);
  EXPECT_THROW(compute_target_t(std::vector<double>{}), ContractViolation);
}

TEST(ThresholdsTest, Validates) {
  EXPECT_THROW((Thresholds{0.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((Thresholds{0.0, 1.5}.validate()), ConfigError);
  EXPECT_THROW((Thresholds{0.0, 0.1, 0.0}.validate()), ConfigError);
  EXPECT_THROW((Thresholds{NAN, 0.1}.validate()), ConfigError);
  EXPECT_NO_THROW((Thresholds{0.0, 1.0}.validate()));
}

TEST(FootprintFoldTest, LabelsEveryInstanceOnce) {
  Rng rng(1);
  const auto preds = random_predictions(rng, 24);
  const auto out = footprint_fold(preds, {-2.0, 0.15}, 3, ModelKind::Knn);
  ASSERT_EQ(out.size(), 24u);
  std::map<Label, int> counts;
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].key, preds[i].key);
    EXPECT_EQ(out[i].fold_id, 3);
    EXPECT_EQ(out[i].model_kind, ModelKind::Knn);
    EXPECT_EQ(out[i].label, oracle(preds[i].true_value, preds[i].predicted_value, -2.0, 0.15, 1e-6));
    ++counts[out[i].label];
  }
  int total = 0;
  for (const auto& [l, c] : counts) total += c;
  EXPECT_EQ(total, 24);
}

TEST(FootprintFoldTest, ExactPredictionsAreModelGood) {
  Rng rng(2);
  auto preds = random_predictions(rng, 24);
  for (auto& p : preds) p.predicted_value = p.true_value;
  for (const auto& a : footprint_fold(preds, {0.0, 0.01}, 1, ModelKind::RandomForest)) {
    EXPECT_TRUE(model_good(a.label));
  }
}

TEST(FootprintFoldTest, DuplicateKeyThrows) {
  std::vector<Prediction> preds{{{1, 1, 5}, 0.0, 0.0}, {{1, 1, 5}, 1.0, 1.0}};
  EXPECT_THROW(footprint_fold(preds, {0.0, 0.15}, 1, ModelKind::RandomForest), ContractViolation);
}

TEST(FootprintFoldTest, RawScaleClassifiesPowersOfTen) {
  // log values -1 and -0.9: raw 0.1 and 0.1259, rel err 0.259 on raw scale.
  const std::vector<Prediction> preds{{{1, 1, 2}, -1.0, -0.9}};
  const Thresholds th{-1.0, 0.2};
  const auto raw = footprint_fold(preds, th, 1, ModelKind::RandomForest, Scale::Raw);
  const auto log = footprint_fold(preds, th, 1, ModelKind::RandomForest, Scale::Log);
  EXPECT_EQ(raw[0].label, Label::GoodPoor);
  EXPECT_EQ(log[0].label, Label::GoodGood);
  EXPECT_EQ(raw[0].true_value, -1.0);
  EXPECT_NEAR(raw[0].relative_error, std::pow(10.0, 0.1) - 1.0, 1e-12);
  EXPECT_EQ(parse_scale("raw"), Scale::Raw);
  EXPECT_THROW(parse_scale("ln"), ConfigError);
}

TEST(SensitivityTest, LoweringPOnlyFlipsModelAxisToPoor) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto preds = random_predictions(rng, 60);
    const double t = rng.uniform(-6.0, 2.0);
    const double p1 = rng.uniform(0.01, 1.0);
    const double p2 = rng.uniform(0.0, p1) + 1e-9;
    const auto before = footprint_fold(preds, {t, p1}, 1, ModelKind::RandomForest);
    const auto after = footprint_fold(preds, {t, p2}, 1, ModelKind::RandomForest);
    const auto report = sensitivity(before, after);
    ASSERT_EQ(report.items.size(), 60u);
    for (const auto& tr : report.items) {
      ASSERT_EQ(algorithm_good(tr.from), algorithm_good(tr.to));
      if (tr.from != tr.to) {
        ASSERT_TRUE(model_good(tr.from));
        ASSERT_FALSE(model_good(tr.to));
      }
    }
  }
}

TEST(SensitivityTest, UnchangedPIsIdentity) {
  Rng rng(4);
  const auto preds = random_predictions(rng, 30);
  const auto a = footprint_fold(preds, {-1.0, 0.15}, 2, ModelKind::Kernel);
  const auto report = sensitivity(a, a);
  int diagonal = 0;
  for (auto l : kLabels) diagonal += report.count(l, l);
  EXPECT_EQ(diagonal, 30);
}

TEST(SensitivityTest, CrossingThresholdFlipsInstance) {
  const std::vector<Prediction> preds{{{1, 1, 5}, -2.0, -2.2}};  // rel err 0.10
  const auto a = footprint_fold(preds, {0.0, 0.15}, 1, ModelKind::RandomForest);
  const auto b = footprint_fold(preds, {0.0, 0.05}, 1, ModelKind::RandomForest);
  const auto report = sensitivity(a, b);
  EXPECT_EQ(report.count(Label::GoodGood, Label::GoodPoor), 1);
  std::stringstream csv;
  write_transitions_csv(csv, report);
  EXPECT_THAT(csv.str(), ::testing::HasSubstr("GoodGood,GoodPoor"));
}

TEST(SensitivityTest, DifferentInstanceSetsThrow) {
  const std::vector<Prediction> one{{{1, 1, 5}, 0.0, 0.0}};
  const std::vector<Prediction> other{{{2, 1, 5}, 0.0, 0.0}};
  const auto a = footprint_fold(one, {0.0, 0.15}, 1, ModelKind::RandomForest);
  const auto b = footprint_fold(other, {0.0, 0.15}, 1, ModelKind::RandomForest);
  EXPECT_THROW(sensitivity(a, b), ContractViolation);
}

TEST(MonotonicityTest, RaisingTOnlyFlipsAlgorithmAxisToGood) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto preds = random_predictions(rng, 60);
    const double t1 = rng.uniform(-8.0, 2.0);
    const double t2 = t1 + rng.uniform(0.0, 4.0);
    const auto lo = footprint_fold(preds, {t1, 0.15}, 1, ModelKind::RandomForest);
    const auto hi = footprint_fold(preds, {t2, 0.15}, 1, ModelKind::RandomForest);
    for (std::size_t i = 0; i < lo.size(); ++i) {
      ASSERT_EQ(model_good(lo[i].label), model_good(hi[i].label));
      ASSERT_EQ(lo[i].relative_error, hi[i].relative_error);
      if (algorithm_good(lo[i].label)) ASSERT_TRUE(algorithm_good(hi[i].label));
    }
  }
}

TEST(AssignmentsCsvTest, RoundTrips) {
  Rng rng(6);
  const auto preds = random_predictions(rng, 10);
  const auto a = footprint_fold(preds, {-1.0, 0.15}, 4, ModelKind::Kernel);
  std::stringstream buf;
  write_assignments_csv(buf, a);
  const auto back = read_assignments_csv(buf);
  ASSERT_EQ(back.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(back[i].key, a[i].key);
    EXPECT_EQ(back[i].true_value, a[i].true_value);
    EXPECT_EQ(back[i].predicted_value, a[i].predicted_value);
    EXPECT_EQ(back[i].relative_error, a[i].relative_error);
    EXPECT_EQ(back[i].label, a[i].label);
    EXPECT_EQ(back[i].fold_id, 4);
    EXPECT_EQ(back[i].model_kind, ModelKind::Kernel);
  }
}

}  // namespace
}  // namespace aif::footprint
