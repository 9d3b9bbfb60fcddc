#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"

#include "aif/errors.hpp"
#include "aif/pipeline.hpp"
#include "support.hpp"

namespace aif::pipeline {
namespace {

namespace fs = std::filesystem;
using ::testing::Contains;
using ::testing::HasSubstr;
using ::testing::IsEmpty;
using ::testing::Not;

constexpr const char* kTinyConfig = R"([run]
master_seed = 99

[suite]
problems = 1-3, 5
instances = 1-5
dimension = 2

[de]
configs = DE1
budget_multiplier = 50
n_runs = 3

[ela]
sample_multiplier = 50

[model]
kinds = random_forest, knn
portfolio_sizes = 5, all
k_folds = 5
n_trees = 20
knn_neighbors = 3
n_permutations = 8
sampling_background = 8
footprint_portfolio = 5

[footprint]
p = 0.15
t_mode = train-median
sensitivity_p = 0.05
beeswarm_top_k = 3
)";

RunConfig tiny() {
  std::istringstream in(kTinyConfig);
  return parse_config(in);
}

std::string with_line(const std::string& section, const std::string& line) {
  std::string text = kTinyConfig;
  const auto pos = text.find("[" + section + "]\n");
  text.insert(pos + section.size() + 3, line + "\n");
  return text;
}

/// Digests of every regular file below `root` except stamps and the manifest.
std::map<std::string, std::string> digests(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel.rfind(".stamps", 0) == 0 || rel == "manifest.json") continue;
    out[rel] = file_sha256(e.path());
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AIF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ConfigTest, ParsesSectionsAndRanges) {
  const auto c = tiny();
  EXPECT_EQ(c.master_seed, 99u);
  EXPECT_EQ(c.suite.problem_ids, (std::vector<int>{1, 2, 3, 5}));
  EXPECT_EQ(c.suite.instance_ids, (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(c.portfolio_sizes, (std::vector<int>{5, kAllFeatures}));
  EXPECT_EQ(c.model_kinds.size(), 2u);
  EXPECT_EQ(c.model_spec.forest.n_trees, 20);
  EXPECT_THAT(validate(c), IsEmpty());
}

TEST(ConfigTest, UnknownKeyIsNamed) {
  std::istringstream in(with_line("suite", "bogus = 1"));
  try {
    parse_config(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_THAT(e.what(), HasSubstr("suite.bogus"));
  }
  std::istringstream section("[nowhere]\nx = 1\n");
  EXPECT_THROW(parse_config(section), ConfigError);
  std::istringstream bad_value("[suite]\ndimension = ten\n");
  EXPECT_THROW(parse_config(bad_value), ConfigError);
}

TEST(ConfigTest, CustomDeConfigSection) {
  std::string text = kTinyConfig;
  text.replace(text.find("configs = DE1"), 13, "configs = mine");
  text += "\n[de_config:mine]\nstrategy = best/1/bin\nf = 0.7\ncr = 0.2\npopulation = 12\n";
  std::istringstream in(text);
  const auto c = parse_config(in);
  ASSERT_EQ(c.de_configs.size(), 1u);
  EXPECT_EQ(c.de_configs[0].config_id, "mine");
  EXPECT_EQ(c.de_configs[0].strategy, de::Strategy::Best1Bin);
  EXPECT_EQ(c.de_configs[0].population_size, 12);
}

TEST(ConfigTest, ValidateListsViolations) {
  auto c = tiny();
  c.p = 0.0;
  EXPECT_THAT(validate(c), Contains(HasSubstr("p")));
  c = tiny();
  c.k_folds = 4;
  EXPECT_THAT(validate(c), Not(IsEmpty()));
  c = tiny();
  c.k_folds = 5;
  EXPECT_THAT(validate(c), IsEmpty());
  c.suite.problem_ids = {25};
  c.n_runs = 0;
  EXPECT_GE(validate(c).size(), 2u);
}

TEST(ConfigTest, StageFingerprintsFollowSections) {
  auto a = tiny();
  auto b = tiny();
  b.p = 0.2;
  EXPECT_EQ(stage_config_json(a, Stage::Train), stage_config_json(b, Stage::Train));
  EXPECT_NE(stage_config_json(a, Stage::Footprint), stage_config_json(b, Stage::Footprint));
  b = tiny();
  b.suite.dimension = 3;
  EXPECT_NE(stage_config_json(a, Stage::Suite), stage_config_json(b, Stage::Suite));
  EXPECT_EQ(stage_config_json(a, Stage::Train), stage_config_json(b, Stage::Train));
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("pipeline");
    outcomes_ = run_pipeline(tiny(), {dir_->path() / "a", false, 0});
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path out() { return dir_->path() / "a"; }

  static inline testing::TempDir* dir_ = nullptr;
  static inline std::vector<StageOutcome> outcomes_;
};

TEST_F(PipelineTest, ProducesDeclaredArtifacts) {
  ASSERT_EQ(outcomes_.size(), kStages.size());
  for (const auto& o : outcomes_) EXPECT_FALSE(o.skipped);
  for (auto stage : kStages) {
    for (const auto& name : stage_outputs(tiny(), stage)) EXPECT_TRUE(fs::exists(out() / name)) << name;
  }
  for (const char* name : {"performance.csv", "features.csv", "assignments.csv", "metrics.csv",
                           "manifest.json", "figures", "report/distribution_table.txt"}) {
    EXPECT_TRUE(fs::exists(out() / name)) << name;
  }
  std::ifstream in(out() / "assignments.csv");
  const auto assignments = footprint::read_assignments_csv(in);
  EXPECT_EQ(assignments.size(), 2u * 20u);  // two model kinds, every instance once
}

TEST_F(PipelineTest, ManifestRecordsRun) {
  std::ifstream in(out() / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m.at("tool_version"), std::string(kToolVersion));
  EXPECT_EQ(m.at("master_seed"), 99);
  EXPECT_EQ(m.at("config_digest"), sha256_hex(config_json(tiny())));
  for (auto stage : kStages) EXPECT_TRUE(m.at("stages").contains(std::string(to_string(stage))));
  EXPECT_TRUE(m.at("stages").at("explain").at("info").contains("max_efficiency_gap"));
}

TEST_F(PipelineTest, RerunSkipsEveryStage) {
  const auto again = run_pipeline(tiny(), {out(), false, 0});
  for (const auto& o : again) EXPECT_TRUE(o.skipped) << to_string(o.stage);
}

TEST_F(PipelineTest, ForcedRerunReproducesDigests) {
  const auto before = digests(out());
  const auto forced = run_pipeline(tiny(), {out(), true, 1});
  for (const auto& o : forced) EXPECT_FALSE(o.skipped);
  EXPECT_EQ(digests(out()), before);
}

TEST_F(PipelineTest, TamperedOutputTriggersRerun) {
  const auto before = file_sha256(out() / "thresholds.csv");
  testing::spit(out() / "thresholds.csv", "garbage\n");
  const auto o = run_stage(Stage::Footprint, tiny(), {out(), false, 0});
  EXPECT_FALSE(o.skipped);
  EXPECT_EQ(file_sha256(out() / "thresholds.csv"), before);
}

TEST_F(PipelineTest, ChangedSectionRerunsOnlyDependentStages) {
  auto c = tiny();
  c.sensitivity_p = {0.1};
  testing::TempDir copy("pipeline_copy");
  fs::copy(out(), copy.path() / "a", fs::copy_options::recursive);
  const auto outcomes = run_pipeline(c, {copy.path() / "a", false, 0});
  for (const auto& o : outcomes) {
    const bool expect_run = o.stage == Stage::Footprint || o.stage == Stage::Report;
    EXPECT_EQ(o.skipped, !expect_run) << to_string(o.stage);
  }
}

// Test-fold targets never reach training: perturbing the targets of fold 1's
// test instances leaves fold 1's training targets, portfolios and models
// byte-identical.
TEST_F(PipelineTest, TestTargetsDoNotLeakIntoTraining) {
  for (const auto& name : stage_inputs(tiny(), Stage::Train)) EXPECT_NE(name, "performance.csv");

  testing::TempDir copy("pipeline_leak");
  const fs::path leak = copy.path() / "a";
  fs::copy(out(), leak, fs::copy_options::recursive);

  std::ifstream folds_in(leak / "folds.csv");
  const auto folds = models::read_folds_csv(folds_in);
  const std::set<InstanceKey> fold1_test(folds[0].test_keys.begin(), folds[0].test_keys.end());
  std::vector<de::PerformanceRecord> records;
  {
    std::ifstream in(leak / "performance.csv");
    records = de::read_performance_csv(in);
  }
  for (auto& r : records) {
    if (!fold1_test.contains(r.key)) continue;
    for (auto& v : r.raw_precisions) v = v * 1e3 + 1.0;
    r.median_log_precision += 3.0;
  }
  {
    std::ofstream outf(leak / "performance.csv");
    de::write_performance_csv(outf, records);
  }

  std::map<std::string, std::string> fold1_before;
  for (auto kind : tiny().model_kinds) {
    for (const auto& name : {fold_train_targets_file(1), model_file(kind, 1), portfolio_file(kind, 1),
                             ranking_file(kind, 1)}) {
      fold1_before[name] = file_sha256(leak / name);
    }
  }
  const auto changed_fold2 = file_sha256(leak / fold_train_targets_file(2));
  EXPECT_FALSE(run_stage(Stage::Folds, tiny(), {leak, false, 0}).skipped);
  EXPECT_FALSE(run_stage(Stage::Train, tiny(), {leak, false, 0}).skipped);
  EXPECT_NE(file_sha256(leak / fold_train_targets_file(2)), changed_fold2);
  for (const auto& [name, digest] : fold1_before) EXPECT_EQ(file_sha256(leak / name), digest) << name;
}

TEST_F(PipelineTest, MissingInputIsStageFailure) {
  testing::TempDir empty("pipeline_empty");
  try {
    run_stage(Stage::Train, tiny(), {empty.path(), false, 0});
    FAIL() << "expected StageFailure";
  } catch (const StageFailure& e) {
    EXPECT_THAT(e.what(), HasSubstr("train"));
  }
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { testing::spit(dir_.path() / "run.ini", kTinyConfig); }
  std::string config() const { return (dir_.path() / "run.ini").string(); }
  testing::TempDir dir_{"cli"};
};

TEST_F(CliTest, ExitCodes) {
  const auto out = (dir_.path() / "out").string();
  EXPECT_EQ(run_cli("validate --config " + config()), 0);
  EXPECT_EQ(run_cli("suite --config " + config() + " --out " + out), 0);
  EXPECT_TRUE(fs::exists(dir_.path() / "out" / "suite.csv"));
  EXPECT_TRUE(fs::exists(dir_.path() / "out" / "manifest.json"));
  // Train before folds: missing inputs.
  EXPECT_EQ(run_cli("train --config " + config() + " --out " + out), 2);

  testing::spit(dir_.path() / "bad.ini", with_line("footprint", "colour = red"));
  EXPECT_EQ(run_cli("validate --config " + (dir_.path() / "bad.ini").string()), 1);
  EXPECT_EQ(run_cli("pipeline --config " + (dir_.path() / "bad.ini").string() + " --out " + out), 1);

  std::string k4 = kTinyConfig;
  k4.replace(k4.find("k_folds = 5"), 11, "k_folds = 4");
  testing::spit(dir_.path() / "k4.ini", k4);
  EXPECT_EQ(run_cli("validate --config " + (dir_.path() / "k4.ini").string()), 1);
  EXPECT_EQ(run_cli("solve --config " + (dir_.path() / "k4.ini").string() + " --out " + out), 1);
}

TEST_F(CliTest, PipelineStopsAfterRequestedStage) {
  const auto out = dir_.path() / "staged";
  EXPECT_EQ(run_cli("pipeline --config " + config() + " --out " + out.string() + " --stage folds"), 0);
  EXPECT_TRUE(fs::exists(out / "folds.csv"));
  EXPECT_FALSE(fs::exists(out / "assignments.csv"));
  EXPECT_EQ(run_cli("pipeline --config " + config() + " --out " + out.string() + " --stage nope"), 1);
}

TEST_F(CliTest, OutDirDefaultsToEnvironment) {
  const auto out = dir_.path() / "from_env";
  const std::string cmd = std::string(kOutDirEnv) + "=" + out.string() + " " + AIF_CLI_PATH +
                          " suite --config " + config() + " > /dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(out / "suite.csv"));
}

}  // namespace
}  // namespace aif::pipeline
