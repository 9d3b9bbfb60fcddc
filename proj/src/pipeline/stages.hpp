#pragma once

#include <filesystem>

#include "json.hpp"

#include "aif/parallel.hpp"
#include "aif/pipeline.hpp"

namespace aif::pipeline::detail {

/// Reads declared inputs from `out`, writes declared outputs into it and
/// records seeds and counters in `info`.
void run_stage_body(Stage stage, const RunConfig& config, const std::filesystem::path& out,
                    const Execution& exec, nlohmann::json& info);

}  // namespace aif::pipeline::detail
