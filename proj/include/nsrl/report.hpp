#pragma once

#include <string>

#include "nsrl/experiment.hpp"

namespace nsrl {

/// One row per run (agent, run, seed, tau_star, reward, discounted_reward,
/// regret, eval_reward, detections), a blank line, then one aggregate row per
/// agent. Missing values are empty cells; detections are ';'-separated.
std::string report_csv(const MetricsReport& report);

std::string report_json(const MetricsReport& report);

/// Column sets for the text tables.
enum class TableLayout { detection_delay, precision_recall, reward, regret, cost };

std::string format_table(const MetricsReport& report, TableLayout layout);

}  // namespace nsrl
