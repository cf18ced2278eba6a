#pragma once

#include <vector>

#include "nsrl/agents.hpp"

namespace nsrl {

struct Ucrl2Config {
  double delta = 0.05;
  int known_changes = 1;
  /// Explicit restart epochs; when empty, ceil(i^3 / l^2) for i = 1, 2, ...
  /// with l = known_changes + 1.
  std::vector<long> restart_epochs;
  int evi_max_iterations = 20000;
};

/// Restart epochs ceil(i^3 / l^2) below `horizon`, duplicates removed.
std::vector<long> ucrl2_restart_schedule(int known_changes, long horizon);

/// Result of extended value iteration on the optimistic model set.
struct OptimisticPlan {
  std::vector<int> policy;
  std::vector<double> bias;  // relative values, min 0
  double gain = 0.0;         // optimistic average reward
  int iterations = 0;
};

/// Confidence-set MDP estimate. Rewards are normalised to [0, 1].
class Ucrl2Model {
 public:
  Ucrl2Model(int n_states, int n_actions);

  void record(int s, int a, double reward01, int next);
  void clear();

  long visits(int s, int a) const { return n_[idx(s, a)]; }
  double mean_reward(int s, int a) const;
  double transition_estimate(int s, int a, int next) const;

  /// Extended value iteration with radii sqrt(7 log(2 S A t / delta) / (2 N))
  /// on rewards and sqrt(14 S log(2 A t / delta) / N) (L1) on transitions,
  /// N = max(1, visits), stopped when the span of the update falls below
  /// `span_tolerance`.
  OptimisticPlan plan(long t, double delta, double span_tolerance, int max_iterations) const;

 private:
  std::size_t idx(int s, int a) const { return static_cast<std::size_t>(s) * n_actions_ + a; }

  int n_states_;
  int n_actions_;
  std::vector<long> n_;
  std::vector<double> reward_sum_;
  std::vector<long> transitions_;  // [s][a][s']
};

/// UCRL2 with full restarts at scheduled epochs.
class Ucrl2Agent : public Controller {
 public:
  Ucrl2Agent(const EnvInfo& env, Ucrl2Config config, long horizon);

  std::string name() const override { return "ucrl2"; }
  int act(int state) override;
  void observe(const ExperienceTuple& tuple, int action) override;
  /// Replays the current optimistic plan without updating the model.
  void begin_evaluation(std::uint64_t) override { evaluating_ = true; }

  int episodes() const { return episodes_; }
  int restarts() const { return restarts_; }
  const Ucrl2Model& model() const { return model_; }
  /// Optimistic gain at the start of the current episode.
  double episode_gain() const { return plan_.gain; }

 private:
  void start_episode();

  EnvInfo env_;
  Ucrl2Config config_;
  std::vector<long> restarts_at_;
  std::size_t next_restart_ = 0;
  Ucrl2Model model_;
  std::vector<long> episode_counts_;
  std::vector<long> counts_at_episode_start_;
  OptimisticPlan plan_;
  long clock_ = 0;
  long since_restart_ = 0;
  bool need_episode_ = true;
  bool evaluating_ = false;
  int episodes_ = 0;
  int restarts_ = 0;
};

}  // namespace nsrl
