#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

#include "aif/errors.hpp"
#include "aif/parallel.hpp"
#include "pipeline/stages.hpp"

namespace aif::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
      out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return out.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

fs::path stamp_path(const fs::path& out, Stage stage) {
  return out / ".stamps" / (std::string(to_string(stage)) + ".json");
}

std::optional<json> read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

bool outputs_intact(const fs::path& out, const json& stamp) {
  if (!stamp.contains("outputs")) return false;
  for (const auto& [name, digest] : stamp.at("outputs").items()) {
    if (!fs::exists(out / name) || file_sha256(out / name) != digest.get<std::string>()) {
      return false;
    }
  }
  return true;
}

Execution execution_for(const RunOptions& options) { return Execution::openmp(options.threads); }

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

StageOutcome run_stage(Stage stage, const RunConfig& config, const RunOptions& options) {
  const fs::path& out = options.out_dir;
  fs::create_directories(out);

  json inputs = json::object();
  for (const auto& name : stage_inputs(config, stage)) {
    if (!fs::exists(out / name)) {
      throw StageFailure(stage, "missing input " + name + " (run the earlier stages first)");
    }
    inputs[name] = file_sha256(out / name);
  }
  const std::string fingerprint =
      sha256_hex(std::string(kToolVersion) + "\n" + std::string(to_string(stage)) + "\n" +
                 stage_config_json(config, stage) + "\n" + inputs.dump());

  StageOutcome outcome{stage, false, 0.0};
  if (!options.force) {
    if (const auto stamp = read_json(stamp_path(out, stage));
        stamp && stamp->value("fingerprint", "") == fingerprint && outputs_intact(out, *stamp)) {
      outcome.skipped = true;
      return outcome;
    }
  }

  json info = json::object();
  const auto start = std::chrono::steady_clock::now();
  try {
    detail::run_stage_body(stage, config, out, execution_for(options), info);
  } catch (const ConfigError&) {
    throw;
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(stage, e.what());
  }
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json outputs = json::object();
  for (const auto& name : stage_outputs(config, stage)) {
    if (!fs::exists(out / name)) throw StageFailure(stage, "did not produce " + name);
    outputs[name] = file_sha256(out / name);
  }
  json stamp = {{"stage", std::string(to_string(stage))},
                {"fingerprint", fingerprint},
                {"inputs", inputs},
                {"outputs", outputs},
                {"info", info},
                {"seconds", outcome.seconds}};
  fs::create_directories(stamp_path(out, stage).parent_path());
  std::ofstream(stamp_path(out, stage)) << stamp.dump(2) << '\n';
  return outcome;
}

std::vector<StageOutcome> run_pipeline(const RunConfig& config, const RunOptions& options,
                                       Stage last) {
  std::vector<StageOutcome> outcomes;
  for (auto stage : kStages) {
    outcomes.push_back(run_stage(stage, config, options));
    if (stage == last) break;
  }
  write_manifest(config, options, outcomes);
  return outcomes;
}

void write_manifest(const RunConfig& config, const RunOptions& options,
                    const std::vector<StageOutcome>& outcomes) {
  const std::string cfg = config_json(config);
  json stages = json::object();
  for (auto stage : kStages) {
    auto stamp = read_json(stamp_path(options.out_dir, stage));
    if (!stamp) continue;
    json entry = {{"inputs", stamp->value("inputs", json::object())},
                  {"outputs", stamp->value("outputs", json::object())},
                  {"info", stamp->value("info", json::object())},
                  {"seconds", stamp->value("seconds", 0.0)},
                  {"skipped_this_run", false}};
    for (const auto& o : outcomes) {
      if (o.stage == stage) entry["skipped_this_run"] = o.skipped;
    }
    stages[std::string(to_string(stage))] = std::move(entry);
  }
  json manifest = {{"tool_version", std::string(kToolVersion)},
                   {"config_digest", sha256_hex(cfg)},
                   {"config", json::parse(cfg)},
                   {"master_seed", config.master_seed},
                   {"threads", options.threads > 0 ? options.threads : max_threads()},
                   {"stages", stages}};
  std::ofstream(options.out_dir / "manifest.json") << manifest.dump(2) << '\n';
}

}  // namespace aif::pipeline
