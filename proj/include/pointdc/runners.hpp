#pragma once
#include <string>
#include <vector>

#include "pointdc/config.hpp"

namespace pointdc {

// Experiment runners behind the CLI. Every command validates its inputs,
// writes its artifacts (metrics/summary/prediction CSVs, checkpoints) plus a
// run_manifest.json into out.dir, and removes partial outputs on failure.
// Identical config + seed reproduce every output byte for byte.

const std::vector<std::string>& command_names();

void run_command(const std::string& command, const RunConfig& cfg);

}  // namespace pointdc
