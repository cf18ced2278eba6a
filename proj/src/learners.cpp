#include <algorithm>
#include <cmath>
#include <map>

#include "nsrl/agents.hpp"
#include "nsrl/error.hpp"

namespace nsrl {

double StepSize::at(long visits) const {
  if (decay_exponent <= 0.0) return constant;
  return 1.0 / std::pow(1.0 + static_cast<double>(visits), decay_exponent);
}

void ql_step(QTable& q, const ExperienceTuple& t, int action, double alpha, double discount) {
  const double target = t.reward + discount * q.max(t.next_state);
  q(t.state, action) = (1.0 - alpha) * q(t.state, action) + alpha * target;
}

double ruql_rate(double alpha, double behavior_prob) {
  if (!(behavior_prob > 0.0 && behavior_prob <= 1.0)) {
    throw ValidationError("ruql: behaviour probability must lie in (0, 1]");
  }
  if (behavior_prob == 1.0) return alpha;  // one repetition is the plain update
  return 1.0 - std::pow(1.0 - alpha, 1.0 / behavior_prob);
}

void ruql_step(QTable& q, const ExperienceTuple& t, int action, double alpha, double discount,
               double behavior_prob) {
  ql_step(q, t, action, ruql_rate(alpha, behavior_prob), discount);
}

QLearner::QLearner(const EnvInfo& env, LearnerConfig config, Rng rng)
    : env_(env), config_(std::move(config)), rng_(rng), q_(env.n_states, env.n_actions, config_.initial_q),
      counts_(env.n_states, env.n_actions) {
  config_.exploration.validate(env.n_states, env.n_actions);
}

int QLearner::act(int state) {
  if (evaluating_) return q_.greedy(state);
  return select_action(config_.exploration, state, env_.n_actions, &q_, &counts_, rng_);
}

void QLearner::observe(const ExperienceTuple& t, int action) {
  if (evaluating_) return;
  counts_.record(t.state, action);
  ql_step(q_, t, action, config_.step.at(counts_.pair(t.state, action) - 1), env_.discount);
}

RuqlLearner::RuqlLearner(const EnvInfo& env, LearnerConfig config, Rng rng)
    : env_(env), config_(std::move(config)), rng_(rng), q_(env.n_states, env.n_actions, config_.initial_q),
      counts_(env.n_states, env.n_actions) {
  config_.exploration.validate(env.n_states, env.n_actions);
}

int RuqlLearner::act(int state) {
  if (evaluating_) return q_.greedy(state);
  const int a = select_action(config_.exploration, state, env_.n_actions, &q_, &counts_, rng_);
  // UCB is deterministic given the history.
  last_prob_ = config_.exploration.kind == PolicyKind::ucb
                   ? 1.0
                   : action_probability(config_.exploration, state, a, env_.n_actions, &q_);
  return a;
}

void RuqlLearner::observe(const ExperienceTuple& t, int action) {
  if (evaluating_) return;
  counts_.record(t.state, action);
  ruql_step(q_, t, action, config_.step.at(counts_.pair(t.state, action) - 1), env_.discount, last_prob_);
}

ContextQState::ContextQState(int n_states, int n_actions, std::vector<int> pattern, double initial_q)
    : pattern_(std::move(pattern)) {
  if (pattern_.empty()) throw ConfigError("context pattern must not be empty");
  std::map<int, int> table_of_label;
  for (int label : pattern_) {
    const auto [it, inserted] = table_of_label.try_emplace(label, static_cast<int>(tables_.size()));
    if (inserted) {
      tables_.emplace_back(n_states, n_actions, initial_q);
      counts_.emplace_back(n_states, n_actions);
    }
    table_of_position_.push_back(it->second);
  }
}

void ContextQState::advance(long confirmed_epoch) {
  if (at_last_entry()) throw ConfigError("more changes detected than the context pattern allows");
  ++position_;
  last_confirmed_ = confirmed_epoch;
}

ContextQLearner::ContextQLearner(const EnvInfo& env, LearnerConfig config, std::vector<int> pattern,
                                 ExperienceDetectorConfig detector, Rng rng, std::uint64_t detector_seed)
    : env_(env), config_(std::move(config)), rng_(rng),
      state_(env.n_states, env.n_actions, std::move(pattern), config_.initial_q), detector_config_(detector),
      detector_(std::move(detector), env.n_states, detector_seed) {
  config_.exploration.validate(env.n_states, env.n_actions);
  if (state_.at_last_entry()) detector_.disable();
}

int ContextQLearner::act(int state) {
  if (evaluating_) return state_.active_table().greedy(state);
  return select_action(config_.exploration, state, env_.n_actions, &state_.active_table(),
                       &state_.active_counts(), rng_);
}

void ContextQLearner::observe(const ExperienceTuple& t, int action) {
  if (!evaluating_) {
    VisitCounts& counts = state_.active_counts();
    counts.record(t.state, action);
    ql_step(state_.active_table(), t, action, config_.step.at(counts.pair(t.state, action) - 1), env_.discount);
  }
  if (const auto det = detector_.observe(t)) {
    state_.advance(det->location);
    if (state_.at_last_entry()) detector_.disable();
  }
}

AgentReport ContextQLearner::report() const {
  return {evaluating_ ? learning_detections_ : detector_.detections(), state_.table_count()};
}

void ContextQLearner::begin_evaluation(std::uint64_t seed) {
  learning_detections_ = detector_.detections();
  evaluating_ = true;
  state_.rewind();
  detector_ = IncrementalDetector(detector_config_, env_.n_states, seed);
  if (state_.at_last_entry()) detector_.disable();
}

ModelBasedSwitcher::ModelBasedSwitcher(const std::vector<MdpModel>& contexts, std::vector<int> pattern,
                                       double epsilon, ExperienceDetectorConfig detector, Rng rng,
                                       std::uint64_t detector_seed, double vi_tolerance)
    : pattern_(std::move(pattern)), n_actions_(contexts.at(0).n_actions()),
      method_(detector.method), rng_(rng), detector_(std::move(detector), contexts.at(0).n_states(), detector_seed) {
  if (pattern_.empty()) throw ConfigError("context pattern must not be empty");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("switcher: epsilon must lie in [0, 1]");
  for (int label : pattern_) {
    if (label < 0 || label >= static_cast<int>(contexts.size())) throw ConfigError("switcher: unknown context label");
  }
  for (const auto& m : contexts) {
    policies_.push_back(PolicySpec::epsilon_perturbed(value_iteration(m, vi_tolerance).policy.table, epsilon));
  }
  if (pattern_.size() == 1) detector_.disable();
}

std::string ModelBasedSwitcher::name() const { return to_string(method_) + "_switcher"; }

int ModelBasedSwitcher::act(int state) {
  return select_action(policies_[pattern_[position_]], state, n_actions_, nullptr, nullptr, rng_);
}

void ModelBasedSwitcher::observe(const ExperienceTuple& t, int) {
  clock_ = t.epoch + 1;
  if (detector_.observe(t)) {
    if (position_ + 1 >= pattern_.size()) throw ConfigError("more changes detected than the context pattern allows");
    ++position_;
    switches_.push_back(clock_);
    if (position_ + 1 == pattern_.size()) detector_.disable();
  }
}

AgentReport ModelBasedSwitcher::report() const { return {detector_.detections(), 0}; }

std::vector<PlayedPolicy> ModelBasedSwitcher::played_policies() const {
  std::vector<PlayedPolicy> out{{0, policies_[pattern_[0]]}};
  for (std::size_t i = 0; i < switches_.size(); ++i) out.push_back({switches_[i], policies_[pattern_[i + 1]]});
  return out;
}

}  // namespace nsrl
