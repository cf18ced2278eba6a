#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nsrl/rng.hpp"

namespace nsrl {

/// Observed transition <s_t, r_t, s_{t+1}> at decision epoch t.
struct ExperienceTuple {
  int state = 0;
  double reward = 0.0;
  int next_state = 0;
  long epoch = 0;
};

/// One stationary context: transition kernel P[s][a][s'], reward R[s][a], discount.
class MdpModel {
 public:
  static constexpr double kStochasticTolerance = 1e-9;

  /// `transition` is row-major [s][a][s'], `reward` row-major [s][a].
  /// Throws ValidationError when a row is not a probability vector, a reward
  /// exceeds `reward_bound` in magnitude, or the discount is outside [0, 1).
  MdpModel(int n_states, int n_actions, std::vector<double> transition,
           std::vector<double> reward, double discount,
           double reward_bound = std::numeric_limits<double>::max());

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double discount() const { return discount_; }
  double reward_bound() const { return reward_bound_; }

  std::span<const double> row(int s, int a) const {
    return {transition_.data() + (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_,
            static_cast<std::size_t>(n_states_)};
  }
  double prob(int s, int a, int next) const { return row(s, a)[next]; }
  double reward(int s, int a) const {
    return reward_[static_cast<std::size_t>(s) * n_actions_ + a];
  }

  const std::vector<double>& transition_data() const { return transition_; }
  const std::vector<double>& reward_data() const { return reward_; }

  bool same_shape(const MdpModel& other) const {
    return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
  }

 private:
  int n_states_;
  int n_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  double discount_;
  double reward_bound_;
};

/// Dense Q(s, a) matrix.
class QTable {
 public:
  QTable(int n_states, int n_actions, double init = 0.0)
      : n_states_(n_states), n_actions_(n_actions),
        values_(static_cast<std::size_t>(n_states) * n_actions, init) {}

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double& operator()(int s, int a) { return values_[index(s, a)]; }
  double operator()(int s, int a) const { return values_[index(s, a)]; }
  std::span<const double> row(int s) const {
    return {values_.data() + static_cast<std::size_t>(s) * n_actions_,
            static_cast<std::size_t>(n_actions_)};
  }

  /// argmax_a Q(s, a); ties go to the lowest action index.
  int greedy(int s) const;
  double max(int s) const;

  const std::vector<double>& data() const { return values_; }
  bool operator==(const QTable&) const = default;

 private:
  std::size_t index(int s, int a) const { return static_cast<std::size_t>(s) * n_actions_ + a; }

  int n_states_;
  int n_actions_;
  std::vector<double> values_;
};

/// N(s) and N(s, b) visit counters for UCB exploration.
class VisitCounts {
 public:
  VisitCounts(int n_states, int n_actions)
      : n_actions_(n_actions), state_(n_states, 0),
        pair_(static_cast<std::size_t>(n_states) * n_actions, 0) {}

  long state(int s) const { return state_[s]; }
  long pair(int s, int a) const { return pair_[static_cast<std::size_t>(s) * n_actions_ + a]; }
  void record(int s, int a) {
    ++state_[s];
    ++pair_[static_cast<std::size_t>(s) * n_actions_ + a];
  }

 private:
  int n_actions_;
  std::vector<long> state_;
  std::vector<long> pair_;
};

enum class PolicyKind { deterministic, epsilon_perturbed, epsilon_greedy, ucb };

/// Action-selection rule. `table` holds the per-state action for the
/// deterministic and epsilon-perturbed kinds; the greedy and UCB kinds read a
/// Q matrix supplied at selection time.
struct PolicySpec {
  PolicyKind kind = PolicyKind::deterministic;
  std::vector<int> table;
  double epsilon = 0.0;
  double ucb_constant = 1.0;

  static PolicySpec deterministic(std::vector<int> actions);
  static PolicySpec epsilon_perturbed(std::vector<int> actions, double epsilon);
  static PolicySpec epsilon_greedy(double epsilon);
  static PolicySpec ucb(double constant);

  void validate(int n_states, int n_actions) const;
};

/// A stationary rule played from epoch `from` until the next entry's epoch.
struct PlayedPolicy {
  long from = 0;
  PolicySpec policy;
};

/// Per-state action distribution, row-major [s][a].
struct StochasticPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;

  double operator()(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * n_actions + a];
  }
  static StochasticPolicy from_deterministic(const std::vector<int>& actions, int n_actions);
};

/// Distribution induced by a deterministic, epsilon-perturbed or epsilon-greedy
/// rule (the latter needs `q`). UCB is history dependent and is rejected.
StochasticPolicy action_distribution(const PolicySpec& policy, int n_states, int n_actions,
                                     const QTable* q = nullptr);

/// Probability that `policy` picks `action` in `state` (same kinds as above).
double action_probability(const PolicySpec& policy, int state, int action, int n_actions,
                          const QTable* q = nullptr);

int select_action(const PolicySpec& policy, int state, int n_actions, const QTable* q,
                  const VisitCounts* counts, Rng& rng);

struct Transition {
  int next_state = 0;
  double reward = 0.0;
};

/// Samples s' from P[s][a][.] by inverse CDF on one uniform draw.
Transition step(const MdpModel& model, int state, int action, Rng& rng);

/// Inverse-CDF draw from a probability row.
int sample_index(std::span<const double> probs, double u);

struct PlanningResult {
  std::vector<double> values;
  PolicySpec policy;
  int iterations = 0;
};

/// Value iteration; stops once the sup-norm change is at most
/// tolerance * (1 - gamma) / (2 * gamma), which makes the greedy policy
/// tolerance-optimal.
PlanningResult value_iteration(const MdpModel& model, double tolerance);

/// One application of the Bellman optimality operator.
std::vector<double> bellman_backup(const MdpModel& model, std::span<const double> values);

/// Q(s, a) = R(s, a) + gamma * sum_s' P(s, a, s') V(s').
QTable action_values(const MdpModel& model, std::span<const double> values);

/// Exact solve of V = R^pi + gamma P^pi V.
std::vector<double> policy_evaluation(const MdpModel& model, const PolicySpec& policy);
std::vector<double> policy_evaluation(const MdpModel& model, const StochasticPolicy& policy);

/// Expected sum_{t < horizon} discount^t r_t from each start state.
std::vector<double> finite_horizon_value(const MdpModel& model, const StochasticPolicy& policy,
                                         long horizon, double discount);

/// Stationary distribution of the chain induced by `policy`.
std::vector<double> stationary_distribution(const MdpModel& model,
                                            const StochasticPolicy& policy);

/// Policy-induced chain P^pi as a dense row-major matrix.
std::vector<double> induced_chain(const MdpModel& model, const StochasticPolicy& policy);

double discounted_return(std::span<const double> rewards, double discount);

/// Ordered tuples plus the action taken at each epoch.
class TrajectoryBuffer {
 public:
  /// Throws ValidationError if the epoch does not follow the previous one.
  void push(const ExperienceTuple& tuple, int action);

  std::size_t size() const { return tuples_.size(); }
  bool empty() const { return tuples_.empty(); }
  const std::vector<ExperienceTuple>& tuples() const { return tuples_; }
  const std::vector<int>& actions() const { return actions_; }
  std::vector<double> rewards() const;

  /// Tuples with epoch >= `epoch`.
  std::span<const ExperienceTuple> since(long epoch) const;

 private:
  std::vector<ExperienceTuple> tuples_;
  std::vector<int> actions_;
};

}  // namespace nsrl
