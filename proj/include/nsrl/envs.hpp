#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "nsrl/mdp.hpp"
#include "nsrl/rng.hpp"

namespace nsrl {

/// Ground-truth changepoints T_1 < ... < T_n and the context active in each
/// segment [T_{j-1}, T_j), with T_0 = 0 and T_{n+1} = horizon.
class ChangepointSchedule {
 public:
  /// Throws ValidationError unless n >= 1, epochs increase strictly inside
  /// (0, horizon), there is one more context than changepoints, and
  /// consecutive contexts differ.
  ChangepointSchedule(std::vector<long> changepoints, std::vector<int> contexts, long horizon);

  /// Stationary schedule (no changepoint); used for single-context baselines.
  static ChangepointSchedule stationary(int context, long horizon);

  const std::vector<long>& changepoints() const { return changepoints_; }
  const std::vector<int>& contexts() const { return contexts_; }
  long horizon() const { return horizon_; }

  std::size_t segment_count() const { return contexts_.size(); }
  /// Index j of the segment containing epoch t.
  std::size_t segment_at(long t) const;
  int context_at(long t) const { return contexts_[segment_at(t)]; }
  long segment_begin(std::size_t j) const { return j == 0 ? 0 : changepoints_[j - 1]; }
  long segment_end(std::size_t j) const {
    return j < changepoints_.size() ? changepoints_[j] : horizon_;
  }
  int distinct_contexts() const;

 private:
  ChangepointSchedule() = default;

  std::vector<long> changepoints_;
  std::vector<int> contexts_;
  long horizon_ = 0;
};

/// Common interface of the simulated environments. Each instance owns its
/// random stream, so an agent's stream is never consumed by the dynamics.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int n_states() const = 0;
  virtual int n_actions() const = 0;
  virtual double discount() const = 0;
  virtual const ChangepointSchedule& schedule() const = 0;
  virtual long clock() const = 0;
  virtual int state() const = 0;

  /// Applies `action` under the context active at the current clock. Returns
  /// std::nullopt once the clock has reached the horizon.
  virtual std::optional<ExperienceTuple> step(int action) = 0;
};

/// Finite MDP whose (P, R) switch between contexts at scheduled epochs.
class NonStationaryEnv final : public Environment {
 public:
  NonStationaryEnv(std::vector<MdpModel> contexts, ChangepointSchedule schedule, Rng rng,
                   int initial_state = 0);

  int n_states() const override { return contexts_.front().n_states(); }
  int n_actions() const override { return contexts_.front().n_actions(); }
  double discount() const override { return contexts_.front().discount(); }
  const ChangepointSchedule& schedule() const override { return schedule_; }
  long clock() const override { return clock_; }
  int state() const override { return state_; }
  std::optional<ExperienceTuple> step(int action) override;

  const MdpModel& active_model() const { return contexts_[schedule_.context_at(clock_)]; }
  const std::vector<MdpModel>& contexts() const { return contexts_; }

 private:
  std::vector<MdpModel> contexts_;
  ChangepointSchedule schedule_;
  Rng rng_;
  long clock_ = 0;
  int state_ = 0;
};

/// Dense random context: Dirichlet(1, ..., 1) transition rows and rewards
/// drawn uniformly from [reward_low, reward_high].
MdpModel generate_random_mdp(int n_states, int n_actions, double discount, Rng& rng,
                             double reward_low = 0.0, double reward_high = 1.0);

/// Energy-harvesting sensor node with finite energy and data buffers.
struct SensorConfig {
  int energy_capacity = 10;
  int data_capacity = 10;
  double lambda_energy = 2.0;
  double lambda_data = 1.0;
  int max_transmit = 5;
  double throughput_scale = 3.0;
  double discount = 0.9;

  void validate() const;
};

/// Data units sent with `energy` units: floor(kappa * ln(1 + energy)).
int sensor_throughput(int energy, double throughput_scale);

/// State index e * (D_max + 1) + d; action = energy units spent. The reward is
/// minus the data queue left after transmission.
MdpModel build_sensor_mdp(const SensorConfig& config);

inline int sensor_state_index(const SensorConfig& c, int energy, int data) {
  return energy * (c.data_capacity + 1) + data;
}

/// Truncated Poisson pmf on {0, ..., cap}; the tail mass is lumped at cap.
std::vector<double> truncated_poisson(double mean, int cap);

}  // namespace nsrl
