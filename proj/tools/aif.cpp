// Command-line driver for the footprint pipeline.
//
//   aif <stage|pipeline|validate> --config run.ini [--out DIR] [--force] [--threads N]
//
// Exit status: 0 success, 1 configuration error, 2 stage failure.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "aif/errors.hpp"
#include "aif/parallel.hpp"
#include "aif/pipeline.hpp"

namespace {

namespace pl = aif::pipeline;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kStageFailure = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv(std::string(pl::kOutDirEnv).c_str()); env && *env) return env;
  return "aif_out";
}

struct Args {
  std::string config;
  std::string out = default_out_dir();
  std::string stage;
  bool force = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, Args& args) {
  cmd->add_option("--config", args.config, "INI run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "artifact directory (default: $AIF_OUT_DIR or ./aif_out)");
  cmd->add_flag("--force", args.force, "ignore cached stage stamps");
  cmd->add_option("--threads", args.threads, "OpenMP threads (0: runtime default)")
      ->check(CLI::NonNegativeNumber);
}

pl::RunConfig load_valid(const std::string& path) {
  auto config = pl::load_config(path);
  const auto problems = pl::validate(config);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw aif::ConfigError(msg);
  }
  return config;
}

void report(const std::vector<pl::StageOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    std::cout << pl::to_string(o.stage) << ": "
              << (o.skipped ? std::string("up to date") : "done in " + std::to_string(o.seconds) + " s")
              << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Algorithm instance footprint pipeline"};
  app.require_subcommand(1);
  Args args;

  std::vector<std::pair<CLI::App*, pl::Stage>> stage_cmds;
  for (auto stage : pl::kStages) {
    auto* cmd = app.add_subcommand(std::string(pl::to_string(stage)),
                                   "run the " + std::string(pl::to_string(stage)) + " stage");
    add_common(cmd, args);
    stage_cmds.emplace_back(cmd, stage);
  }
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order, then write manifest.json");
  add_common(pipeline, args);
  pipeline->add_option("--stage", args.stage, "stop after this stage");

  auto* validate = app.add_subcommand("validate", "list configuration problems without running");
  validate->add_option("--config", args.config, "INI run configuration")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto problems = pl::validate(pl::load_config(args.config));
      for (const auto& p : problems) std::cout << "violation: " << p << '\n';
      if (problems.empty()) std::cout << "ok\n";
      return problems.empty() ? kOk : kConfigError;
    }

    const auto config = load_valid(args.config);
    aif::set_default_threads(args.threads);
    const pl::RunOptions options{args.out, args.force, args.threads};

    if (pipeline->parsed()) {
      pl::Stage last = pl::Stage::Report;
      if (!args.stage.empty()) {
        const auto s = pl::parse_stage(args.stage);
        if (!s) throw aif::ConfigError("unknown stage '" + args.stage + "'");
        last = *s;
      }
      report(pl::run_pipeline(config, options, last));
      return kOk;
    }
    for (const auto& [cmd, stage] : stage_cmds) {
      if (!cmd->parsed()) continue;
      const auto outcome = pl::run_stage(stage, config, options);
      pl::write_manifest(config, options, {outcome});
      report({outcome});
    }
    return kOk;
  } catch (const aif::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pl::StageFailure& e) {
    std::cerr << e.what() << '\n';
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStageFailure;
  }
}
