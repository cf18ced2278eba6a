#pragma once

#include <filesystem>
#include <string>

#include "nsrl/experiment.hpp"

namespace nsrl {

/// JSON experiment file. Unknown keys and ill-typed values raise ConfigError
/// naming the offending field path (e.g. "agents[1].learner.step").
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace nsrl
