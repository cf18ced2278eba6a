#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nsrl/experience_detector.hpp"
#include "nsrl/mdp.hpp"

namespace nsrl {

/// What a controller may know about its environment up front.
struct EnvInfo {
  int n_states = 0;
  int n_actions = 0;
  double discount = 0.9;
  double reward_low = 0.0;   // reward range, used only for normalisation
  double reward_high = 1.0;
};

struct AgentReport {
  std::vector<Detection> detections;  // epochs of declared changes
  int q_tables = 0;
};

/// Uniform run interface: act on the current state, then observe the tuple
/// the environment produced for that action.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual int act(int state) = 0;
  virtual void observe(const ExperienceTuple& tuple, int action) = 0;
  virtual AgentReport report() const { return {}; }
  /// Freezes learning and acts greedily for a replay of the schedule.
  /// Detecting controllers restart their detector from `seed`.
  virtual void begin_evaluation(std::uint64_t /*seed*/) {}
  /// Rules followed so far, for controllers that play known policies; empty
  /// for learners.
  virtual std::vector<PlayedPolicy> played_policies() const { return {}; }
};

/// Constant rate, or 1 / (1 + N(s, a))^exponent when `decay_exponent` > 0.
struct StepSize {
  double constant = 0.1;
  double decay_exponent = 0.0;

  double at(long visits) const;
};

/// Q(s, a) <- (1 - alpha) Q(s, a) + alpha (r + gamma max_b Q(s', b)).
void ql_step(QTable& q, const ExperienceTuple& tuple, int action, double alpha, double discount);

/// QL step with alpha replaced by 1 - (1 - alpha)^(1 / behavior_prob).
void ruql_step(QTable& q, const ExperienceTuple& tuple, int action, double alpha, double discount,
               double behavior_prob);

/// 1 - (1 - alpha)^(1 / behavior_prob).
double ruql_rate(double alpha, double behavior_prob);

struct LearnerConfig {
  PolicySpec exploration = PolicySpec::epsilon_greedy(0.1);
  StepSize step;
  double initial_q = 0.0;
};

/// Single-table Q-learning.
class QLearner : public Controller {
 public:
  QLearner(const EnvInfo& env, LearnerConfig config, Rng rng);

  std::string name() const override { return "ql"; }
  int act(int state) override;
  void observe(const ExperienceTuple& tuple, int action) override;
  AgentReport report() const override { return {{}, 1}; }
  void begin_evaluation(std::uint64_t) override { evaluating_ = true; }

  const QTable& q() const { return q_; }

 private:
  EnvInfo env_;
  LearnerConfig config_;
  Rng rng_;
  QTable q_;
  VisitCounts counts_;
  bool evaluating_ = false;
};

/// Repeated-update Q-learning: the step is amplified by the inverse
/// probability with which the behaviour policy chose the action.
class RuqlLearner : public Controller {
 public:
  RuqlLearner(const EnvInfo& env, LearnerConfig config, Rng rng);

  std::string name() const override { return "ruql"; }
  int act(int state) override;
  void observe(const ExperienceTuple& tuple, int action) override;
  AgentReport report() const override { return {{}, 1}; }
  void begin_evaluation(std::uint64_t) override { evaluating_ = true; }

  const QTable& q() const { return q_; }

 private:
  EnvInfo env_;
  LearnerConfig config_;
  Rng rng_;
  QTable q_;
  VisitCounts counts_;
  double last_prob_ = 1.0;
  bool evaluating_ = false;
};

/// Per-context Q tables keyed by the distinct labels of a known change
/// pattern. The j-th confirmed change moves the active position to pattern
/// entry j; a revisited label resumes its table.
class ContextQState {
 public:
  ContextQState(int n_states, int n_actions, std::vector<int> pattern, double initial_q = 0.0);

  QTable& active_table() { return tables_[table_of_position_[position_]]; }
  const QTable& active_table() const { return tables_[table_of_position_[position_]]; }
  VisitCounts& active_counts() { return counts_[table_of_position_[position_]]; }

  /// Throws ConfigError when the pattern has no next entry.
  void advance(long confirmed_epoch);
  void rewind() {
    position_ = 0;
    last_confirmed_ = 0;
  }

  int table_count() const { return static_cast<int>(tables_.size()); }
  std::size_t position() const { return position_; }
  int active_label() const { return pattern_[position_]; }
  bool at_last_entry() const { return position_ + 1 == pattern_.size(); }
  long last_confirmed() const { return last_confirmed_; }
  const std::vector<int>& pattern() const { return pattern_; }
  const QTable& table(int i) const { return tables_[i]; }

 private:
  std::vector<int> pattern_;
  std::vector<int> table_of_position_;
  std::vector<QTable> tables_;
  std::vector<VisitCounts> counts_;
  std::size_t position_ = 0;
  long last_confirmed_ = 0;
};

/// Context Q-learning: one table per distinct context, switched on
/// changes confirmed by the incremental detector over tuples since the last
/// confirmed change.
class ContextQLearner : public Controller {
 public:
  ContextQLearner(const EnvInfo& env, LearnerConfig config, std::vector<int> pattern,
                  ExperienceDetectorConfig detector, Rng rng, std::uint64_t detector_seed);

  std::string name() const override { return "context_ql"; }
  int act(int state) override;
  void observe(const ExperienceTuple& tuple, int action) override;
  AgentReport report() const override;
  /// Rewinds to the first pattern entry with a fresh detector.
  void begin_evaluation(std::uint64_t seed) override;

  const ContextQState& state() const { return state_; }

 private:
  EnvInfo env_;
  LearnerConfig config_;
  Rng rng_;
  ContextQState state_;
  ExperienceDetectorConfig detector_config_;
  IncrementalDetector detector_;
  std::vector<Detection> learning_detections_;
  bool evaluating_ = false;
};

/// Known-model switching: plays the epsilon-perturbed optimal policy of the
/// presumed context and moves to the next pattern entry on each detection.
class ModelBasedSwitcher : public Controller {
 public:
  /// `contexts[label]` is the model for that label.
  ModelBasedSwitcher(const std::vector<MdpModel>& contexts, std::vector<int> pattern, double epsilon,
                     ExperienceDetectorConfig detector, Rng rng, std::uint64_t detector_seed,
                     double vi_tolerance = 1e-8);

  std::string name() const override;
  int act(int state) override;
  void observe(const ExperienceTuple& tuple, int action) override;
  AgentReport report() const override;
  std::vector<PlayedPolicy> played_policies() const override;

  std::size_t position() const { return position_; }
  /// Epochs at which the played policy changed.
  const std::vector<long>& switch_epochs() const { return switches_; }
  const std::vector<int>& optimal_actions(int label) const { return policies_[label].table; }

 private:
  std::vector<PolicySpec> policies_;
  std::vector<int> pattern_;
  int n_actions_;
  DetectorMethod method_;
  Rng rng_;
  IncrementalDetector detector_;
  std::size_t position_ = 0;
  std::vector<long> switches_;
  long clock_ = 0;
};

}  // namespace nsrl
