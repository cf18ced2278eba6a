#pragma once

#include <span>
#include <vector>

#include "nsrl/envs.hpp"

namespace nsrl {

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single value
  double median = 0.0;
  std::size_t count = 0;
};

/// Throws ValidationError on empty input.
SummaryStats detection_stats(std::span<const double> values);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  long true_positives = 0;
  long detected = 0;
  long truth = 0;
};

/// Greedy one-to-one matching: (detection, truth) pairs are taken in order of
/// increasing distance while both are unmatched and |d - t| <= window.
/// With no detections precision is 1 (no false alarm); with no truth recall is 1.
PrecisionRecall precision_recall(std::span<const long> detected, std::span<const long> truth, long window);

/// Pooled over runs: sums of matches, detections and true changes.
PrecisionRecall pool(std::span<const PrecisionRecall> runs);

struct RegretOptions {
  double discount = 1.0;
  /// true: discount by the global epoch, so segment j's oracle value is
  /// weighted by discount^T_{j-1}. false: every segment restarts the clock.
  bool global_clock = false;
  /// The oracle plays the epsilon-perturbed optimal policy of each segment.
  double oracle_epsilon = 0.0;
};

/// Sum over true segments of (oracle expected segment return from the
/// realised segment start state) - (realised segment return). The oracle
/// value is exact (finite-horizon policy evaluation). Throws
/// UnsupportedOperation when `contexts` is empty, i.e. the models are unknown.
/// When `played` lists the rules the agent followed (ordered by epoch, the
/// first from epoch 0), the realised segment return is replaced by their exact
/// expected return from the same start state, so only the choice of rules is
/// charged and sampling noise drops out.
double regret(std::span<const ExperienceTuple> trajectory, const std::vector<MdpModel>& contexts,
              const ChangepointSchedule& schedule, const RegretOptions& options,
              std::span<const PlayedPolicy> played = {});

}  // namespace nsrl
