#pragma once

#include <string>

#include "lipmab/config.hpp"
#include "lipmab/orchestrator.hpp"

namespace lipmab {

// Phase summaries, budgets, flags and the regret decomposition. Pure
// function of the result, so identical runs give identical bytes.
std::string summary_json(const ProtocolConfig& config, const RunResult& result);

// Config echo, stream seeds and the instance manifest.
std::string manifest_json(const ProtocolConfig& config, const RunResult& result);

// Constructor arguments plus the suprema table; spike apexes go under
// "hidden".
std::string instance_manifest_json(const InstanceSpec& spec, const std::vector<double>& suprema,
                                   const std::vector<Point>& hidden);

}  // namespace lipmab
