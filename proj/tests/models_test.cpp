#include <map>
#include <set>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "aif/errors.hpp"
#include "aif/models.hpp"
#include "aif/stats.hpp"
#include "support.hpp"

namespace aif::models {
namespace {

using ::testing::SizeIs;

std::vector<InstanceKey> grid_keys(int problems, int instances, int dimension = 5) {
  std::vector<InstanceKey> keys;
  for (int p = 1; p <= problems; ++p) {
    for (int i = 1; i <= instances; ++i) keys.push_back({p, i, dimension});
  }
  return keys;
}

struct Regression {
  Matrix x;
  std::vector<double> y;
};

Regression smooth_problem(std::uint64_t seed, int n, int d) {
  Rng rng(seed);
  Regression r{testing::random_matrix(rng, n, d), std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    r.y[static_cast<std::size_t>(i)] = std::sin(r.x(i, 0)) + 0.5 * r.x(i, 1) * r.x(i, 1);
  }
  return r;
}

TEST(FoldsTest, PartitionPropertiesHoldForManySeeds) {
  const auto keys = grid_keys(24, 5);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto folds = make_folds(keys, 5, seed);
    ASSERT_THAT(folds, SizeIs(5));
    std::set<InstanceKey> seen;
    for (const auto& fold : folds) {
      ASSERT_THAT(fold.test_keys, SizeIs(24));
      ASSERT_THAT(fold.train_keys, SizeIs(96));
      std::set<int> problems;
      for (const auto& k : fold.test_keys) {
        problems.insert(k.problem_id);
        ASSERT_TRUE(seen.insert(k).second) << "instance in two test folds";
      }
      ASSERT_EQ(problems.size(), 24u);
      const std::set<InstanceKey> train(fold.train_keys.begin(), fold.train_keys.end());
      for (const auto& k : fold.test_keys) ASSERT_FALSE(train.contains(k));
    }
    ASSERT_EQ(seen.size(), keys.size());
  }
}

TEST(FoldsTest, SeedChangesAssignment) {
  const auto keys = grid_keys(24, 5);
  EXPECT_NE(make_folds(keys, 5, 1)[0].test_keys, make_folds(keys, 5, 2)[0].test_keys);
  EXPECT_EQ(make_folds(keys, 5, 1)[0].test_keys, make_folds(keys, 5, 1)[0].test_keys);
}

TEST(FoldsTest, RejectsBadLayouts) {
  const auto keys = grid_keys(3, 5);
  EXPECT_THROW(make_folds(keys, 1, 0), ConfigError);
  EXPECT_THROW(make_folds(keys, 4, 0), ConfigError);
  auto ragged = keys;
  ragged.pop_back();
  EXPECT_THROW(make_folds(ragged, 5, 0), ConfigError);
  EXPECT_NO_THROW(make_folds(grid_keys(3, 10), 5, 0));
}

TEST(FoldsTest, CsvRoundTrips) {
  const auto folds = make_folds(grid_keys(4, 5), 5, 3);
  std::stringstream buf;
  write_folds_csv(buf, folds);
  const auto back = read_folds_csv(buf);
  ASSERT_EQ(back.size(), folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    EXPECT_EQ(back[f].fold_id, folds[f].fold_id);
    EXPECT_EQ(back[f].test_keys, folds[f].test_keys);
    EXPECT_EQ(back[f].train_keys, folds[f].train_keys);
  }
}

TEST(ForestTest, PredictionsStayInsideTargetRange) {
  const auto data = smooth_problem(1, 80, 4);
  const auto forest = fit_random_forest(data.x, data.y, {.n_trees = 30, .seed = 5});
  const auto [lo, hi] = std::minmax_element(data.y.begin(), data.y.end());
  Rng rng(2);
  const Matrix probe = testing::random_matrix(rng, 200, 4, -10.0, 10.0);
  for (int i = 0; i < probe.rows(); ++i) {
    const double p = forest.predict(testing::row(probe, i));
    EXPECT_GE(p, *lo);
    EXPECT_LE(p, *hi);
  }
}

TEST(ForestTest, FitIsScheduleIndependent) {
  const auto data = smooth_problem(4, 60, 5);
  const ForestParams params{.n_trees = 25, .seed = 17};
  const auto a = fit_random_forest(data.x, data.y, params, Execution::serial());
  const auto b = fit_random_forest(data.x, data.y, params, Execution::openmp(4));
  std::stringstream sa, sb;
  save_model(sa, Model(a));
  save_model(sb, Model(b));
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(ForestTest, LearnsSmoothSignal) {
  const auto train = smooth_problem(5, 300, 3);
  const auto test = smooth_problem(6, 100, 3);
  const auto model = fit_model({.kind = ModelKind::RandomForest, .forest = {.n_trees = 50, .seed = 1}},
                               train.x, train.y);
  EXPECT_GT(evaluate_model(model, test.x, test.y).r2, 0.7);
}

TEST(KnnTest, OneNeighbourReproducesTrainingTargets) {
  const auto data = smooth_problem(7, 50, 3);
  const auto knn = fit_knn(data.x, data.y, 1);
  for (int i = 0; i < data.x.rows(); ++i) {
    EXPECT_EQ(knn.predict(testing::row(data.x, i)), data.y[static_cast<std::size_t>(i)]);
  }
  EXPECT_THROW(fit_knn(data.x, data.y, 0), ConfigError);
  EXPECT_THROW(fit_knn(data.x, data.y, 51), ConfigError);
}

TEST(KnnTest, AveragesNearestTargets) {
  Matrix x(4, 1);
  x << 0.0, 1.0, 2.0, 10.0;
  const std::vector<double> y{1.0, 2.0, 3.0, 100.0};
  const auto knn = fit_knn(x, y, 2);
  const std::vector<double> q{0.4};
  EXPECT_DOUBLE_EQ(knn.predict(q), 1.5);
}

TEST(StandardizerTest, UsesOnlyFittedRows) {
  Matrix x(3, 2);
  x << 1.0, 5.0, 2.0, 5.0, 3.0, 5.0;
  const auto s = Standardizer::fit(x);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scale[0], 1.0);
  EXPECT_DOUBLE_EQ(s.scale[1], 1.0);
  const std::vector<double> probe{4.0, 7.0};
  const Vector z = s.apply(probe);
  EXPECT_DOUBLE_EQ(z[0], 2.0);
  EXPECT_DOUBLE_EQ(z[1], 2.0);
}

// Adding rows to an evaluation set never changes a fitted model's predictions.
TEST(StandardizerTest, TestRowsDoNotLeakIntoFit) {
  const auto train = smooth_problem(8, 40, 3);
  const auto test = smooth_problem(9, 10, 3);
  const auto model = fit_model({.kind = ModelKind::Kernel}, train.x, train.y);
  const Vector before = predict_rows(model, test.x);
  Matrix extreme = test.x * 1000.0;
  predict_rows(model, extreme);
  EXPECT_EQ(predict_rows(model, test.x), before);
}

TEST(KernelTest, SmallPenaltyInterpolates) {
  const auto data = smooth_problem(10, 30, 2);
  const auto model = fit_kernel(data.x, data.y, {.penalty = 1e-9, .bandwidth = 0.0});
  for (int i = 0; i < data.x.rows(); ++i) {
    EXPECT_NEAR(model.predict(testing::row(data.x, i)), data.y[static_cast<std::size_t>(i)], 1e-4);
  }
  EXPECT_GT(model.bandwidth(), 0.0);
  EXPECT_THROW(fit_kernel(data.x, data.y, {.penalty = 0.0}), ConfigError);
  EXPECT_THROW(fit_kernel(data.x, data.y, {.penalty = 0.1, .bandwidth = -1.0}), ConfigError);
}

TEST(MetricsTest, MatchesDefinitions) {
  const std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> pred{1.5, 2.0, 2.0, 4.0};
  const auto m = compute_metrics(truth, pred);
  EXPECT_DOUBLE_EQ(m.mae, 1.5 / 4.0);
  EXPECT_DOUBLE_EQ(m.r2, 1.0 - 1.25 / 5.0);

  const std::vector<double> flat{2.0, 2.0};
  EXPECT_EQ(compute_metrics(flat, flat).r2, 1.0);
  const std::vector<double> off{2.0, 2.5};
  EXPECT_EQ(compute_metrics(flat, off).r2, 0.0);
  EXPECT_THROW(compute_metrics(flat, pred), ContractViolation);
}

TEST(PersistenceTest, EveryKindRoundTrips) {
  const auto data = smooth_problem(11, 40, 3);
  Rng rng(3);
  const Matrix probe = testing::random_matrix(rng, 20, 3);
  for (auto kind : {ModelKind::RandomForest, ModelKind::Knn, ModelKind::Kernel}) {
    const auto model = fit_model({.kind = kind, .forest = {.n_trees = 10, .seed = 3}}, data.x, data.y);
    std::stringstream buf;
    save_model(buf, model);
    const auto back = load_model(buf);
    EXPECT_EQ(kind_of(back), kind);
    EXPECT_EQ(predict_rows(back, probe), predict_rows(model, probe)) << to_string(kind);
  }
}

TEST(ModelKindTest, NamesRoundTrip) {
  for (auto kind : {ModelKind::RandomForest, ModelKind::Knn, ModelKind::Kernel}) {
    EXPECT_EQ(parse_model_kind(to_string(kind)), kind);
  }
  EXPECT_EQ(display_label(ModelKind::RandomForest), "RF");
  EXPECT_EQ(display_label(ModelKind::Kernel), "SVM-surrogate");
  EXPECT_THROW(parse_model_kind("svm"), ConfigError);
}

}  // namespace
}  // namespace aif::models
