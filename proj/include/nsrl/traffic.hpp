#pragma once

#include <array>
#include <vector>

#include "nsrl/envs.hpp"

namespace nsrl {

/// Single four-lane junction; one decision epoch per green phase.
struct TrafficConfig {
  static constexpr int kLanes = 4;
  static constexpr int kPhases = 4;
  static constexpr int kLevels = 3;

  int lane_capacity = 30;
  std::array<double, kLanes> arrival_rates{0.05, 0.05, 0.05, 0.05};  // vehicles / second
  std::vector<int> green_durations{20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70};
  double service_rate = 0.5;  // vehicles cleared per green second
  double discount = 0.9;

  void validate() const;

  static constexpr int state_count() { return 81 * kPhases; }
};

/// Congestion level of a queue: 0 below ceil(cap/3), 2 from ceil(2 cap/3), else 1.
int aggregate_level(int queue, int capacity);

/// Observed state index for per-lane levels and the current phase.
int traffic_state_index(const std::array<int, TrafficConfig::kLanes>& levels, int phase);

/// Exact queue simulator; only the aggregated state is observable.
class TrafficSimulator {
 public:
  using Queues = std::array<int, TrafficConfig::kLanes>;

  explicit TrafficSimulator(TrafficConfig config);

  const TrafficConfig& config() const { return config_; }
  const Queues& queues() const { return queues_; }
  int phase() const { return phase_; }
  int observed_state() const;

  void set_arrival_rates(const std::array<double, TrafficConfig::kLanes>& rates) {
    config_.arrival_rates = rates;
  }
  void set_state(const Queues& queues, int phase);

  /// Serves the green lane for the chosen duration, adds Poisson arrivals to
  /// every lane (truncated at capacity) and advances the phase. Returns the
  /// cost: total queued vehicles at the end of the epoch.
  int advance(int action, Rng& rng);

 private:
  TrafficConfig config_;
  Queues queues_{};
  int phase_ = 0;
};

/// Traffic junction whose arrival rates switch at scheduled epochs. The
/// reward is minus the summed exact queue lengths.
class TrafficEnv final : public Environment {
 public:
  TrafficEnv(TrafficConfig base, std::vector<std::array<double, TrafficConfig::kLanes>> context_rates,
             ChangepointSchedule schedule, Rng rng);

  int n_states() const override { return TrafficConfig::state_count(); }
  int n_actions() const override { return static_cast<int>(sim_.config().green_durations.size()); }
  double discount() const override { return sim_.config().discount; }
  const ChangepointSchedule& schedule() const override { return schedule_; }
  long clock() const override { return clock_; }
  int state() const override { return sim_.observed_state(); }
  std::optional<ExperienceTuple> step(int action) override;

  const TrafficSimulator& simulator() const { return sim_; }

 private:
  TrafficSimulator sim_;
  std::vector<std::array<double, TrafficConfig::kLanes>> context_rates_;
  ChangepointSchedule schedule_;
  Rng rng_;
  long clock_ = 0;
};

/// Aggregated-state MDP facade: each level is represented by queues spread
/// uniformly over its range, and the exact next-level distribution and mean
/// cost are computed from that representation. The hidden-queue simulator is
/// only approximately Markov in the aggregated state, so this model is an
/// approximation of TrafficEnv.
MdpModel build_traffic_mdp(const TrafficConfig& config);

}  // namespace nsrl
