#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aif/de.hpp"
#include "aif/footprint.hpp"
#include "aif/models.hpp"
#include "aif/suite.hpp"

namespace aif::pipeline {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kOutDirEnv = "AIF_OUT_DIR";
inline constexpr int kAllFeatures = 0;  // portfolio size meaning "whole schema"

enum class Stage { Suite, Solve, Features, Folds, Train, Explain, Footprint, Report };

inline constexpr std::array<Stage, 8> kStages = {Stage::Suite, Stage::Solve,   Stage::Features,
                                                 Stage::Folds, Stage::Train,   Stage::Explain,
                                                 Stage::Footprint, Stage::Report};

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

/// Problem ids 1..24.
std::vector<int> all_problems();

enum class TargetMode { TrainMedian, Explicit };

struct RunConfig {
  std::uint64_t master_seed = 1;

  suite::SuiteConfig suite{all_problems(), {1, 2, 3, 4, 5}, 5};

  std::vector<de::DeConfig> de_configs;
  int budget_multiplier = 500;
  int n_runs = 30;

  int sample_multiplier = 100;

  std::vector<models::ModelKind> model_kinds{models::ModelKind::RandomForest};
  std::vector<int> portfolio_sizes{10, 20, 30, 40, 50, kAllFeatures};
  int k_folds = 5;
  models::ModelSpec model_spec;  // kind is overwritten per trained model
  int n_permutations = 256;
  int sampling_background = 32;
  std::string target_config;  // DE config whose performance is modelled
  int footprint_portfolio = 30;

  double p = 0.15;
  TargetMode t_mode = TargetMode::TrainMedian;
  double t_value = 0.0;
  footprint::Scale scale = footprint::Scale::Log;
  double eps_guard = 1e-6;
  std::vector<double> sensitivity_p{0.05};
  int beeswarm_top_k = 10;
};

/// INI syntax, see README. Unknown sections or keys and malformed values
/// throw ConfigError naming the offending entry.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Every semantic violation, empty when the config is runnable.
std::vector<std::string> validate(const RunConfig& config);

/// Canonical JSON text of the sections a stage depends on.
std::string stage_config_json(const RunConfig& config, Stage stage);
/// Canonical JSON text of the whole config.
std::string config_json(const RunConfig& config);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir;
  bool force = false;
  int threads = 0;  // 0: OpenMP default
};

struct StageOutcome {
  Stage stage = Stage::Suite;
  bool skipped = false;
  double seconds = 0.0;
};

/// Wraps any non-config error raised while a stage runs.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(Stage stage, const std::string& what)
      : std::runtime_error("stage '" + std::string(to_string(stage)) + "' failed: " + what),
        stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

/// Declared inputs and outputs, relative to the output directory.
std::vector<std::string> stage_inputs(const RunConfig& config, Stage stage);
std::vector<std::string> stage_outputs(const RunConfig& config, Stage stage);

/// Runs one stage. Skipped when its stamp matches the current config section
/// and input digests and every recorded output is unchanged, unless forced.
StageOutcome run_stage(Stage stage, const RunConfig& config, const RunOptions& options);

/// Runs suite .. last in order, then writes manifest.json.
std::vector<StageOutcome> run_pipeline(const RunConfig& config, const RunOptions& options,
                                       Stage last = Stage::Report);

/// Rewrites manifest.json from the stamps currently on disk.
void write_manifest(const RunConfig& config, const RunOptions& options,
                    const std::vector<StageOutcome>& outcomes);

// --- artifact names -----------------------------------------------------------

std::string fold_train_targets_file(int fold_id);
std::string ranking_file(models::ModelKind kind, int fold_id);
std::string portfolio_file(models::ModelKind kind, int fold_id);
std::string model_file(models::ModelKind kind, int fold_id);
std::string predictions_file(models::ModelKind kind, int fold_id);
std::string meta_file(models::ModelKind kind, int fold_id);

}  // namespace aif::pipeline
