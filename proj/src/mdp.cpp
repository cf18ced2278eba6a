#include "nsrl/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsrl/error.hpp"

namespace nsrl {

MdpModel::MdpModel(int n_states, int n_actions, std::vector<double> transition,
                   std::vector<double> reward, double discount, double reward_bound)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      discount_(discount),
      reward_bound_(reward_bound) {
  if (n_states_ <= 0 || n_actions_ <= 0) throw ValidationError("MdpModel: empty state or action set");
  const auto n_sa = static_cast<std::size_t>(n_states_) * n_actions_;
  if (transition_.size() != n_sa * n_states_) throw ValidationError("MdpModel: transition size mismatch");
  if (reward_.size() != n_sa) throw ValidationError("MdpModel: reward size mismatch");
  if (!(discount_ >= 0.0 && discount_ < 1.0)) throw ValidationError("MdpModel: discount must lie in [0, 1)");
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (double p : row(s, a)) {
        if (!(p >= 0.0)) {
          std::ostringstream msg;
          msg << "MdpModel: negative transition probability at (" << s << ", " << a << ")";
          throw ValidationError(msg.str());
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kStochasticTolerance) {
        std::ostringstream msg;
        msg << "MdpModel: row (" << s << ", " << a << ") sums to " << sum;
        throw ValidationError(msg.str());
      }
      if (!(std::abs(this->reward(s, a)) <= reward_bound_)) {
        throw ValidationError("MdpModel: reward exceeds the configured bound");
      }
    }
  }
}

int QTable::greedy(int s) const {
  auto r = row(s);
  int best = 0;
  for (int a = 1; a < n_actions_; ++a) {
    if (r[a] > r[best]) best = a;
  }
  return best;
}

double QTable::max(int s) const { return row(s)[greedy(s)]; }

PolicySpec PolicySpec::deterministic(std::vector<int> actions) {
  return {PolicyKind::deterministic, std::move(actions), 0.0, 1.0};
}
PolicySpec PolicySpec::epsilon_perturbed(std::vector<int> actions, double epsilon) {
  return {PolicyKind::epsilon_perturbed, std::move(actions), epsilon, 1.0};
}
PolicySpec PolicySpec::epsilon_greedy(double epsilon) {
  return {PolicyKind::epsilon_greedy, {}, epsilon, 1.0};
}
PolicySpec PolicySpec::ucb(double constant) { return {PolicyKind::ucb, {}, 0.0, constant}; }

void PolicySpec::validate(int n_states, int n_actions) const {
  if (n_actions <= 0) throw ValidationError("policy: empty action set");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("policy: epsilon outside [0, 1]");
  if (kind == PolicyKind::ucb && !(ucb_constant >= 0.0)) {
    throw ValidationError("policy: UCB constant must be non-negative");
  }
  if (kind == PolicyKind::deterministic || kind == PolicyKind::epsilon_perturbed) {
    if (table.size() != static_cast<std::size_t>(n_states)) {
      throw ValidationError("policy: action table does not cover every state");
    }
    for (int a : table) {
      if (a < 0 || a >= n_actions) throw ValidationError("policy: action index out of range");
    }
  }
}

StochasticPolicy StochasticPolicy::from_deterministic(const std::vector<int>& actions,
                                                      int n_actions) {
  StochasticPolicy out{static_cast<int>(actions.size()), n_actions,
                       std::vector<double>(actions.size() * n_actions, 0.0)};
  for (std::size_t s = 0; s < actions.size(); ++s) out.probs[s * n_actions + actions[s]] = 1.0;
  return out;
}

double action_probability(const PolicySpec& policy, int state, int action, int n_actions,
                          const QTable* q) {
  switch (policy.kind) {
    case PolicyKind::deterministic:
      return policy.table[state] == action ? 1.0 : 0.0;
    case PolicyKind::epsilon_perturbed: {
      if (n_actions == 1) return 1.0;
      return policy.table[state] == action ? 1.0 - policy.epsilon
                                           : policy.epsilon / (n_actions - 1);
    }
    case PolicyKind::epsilon_greedy: {
      if (q == nullptr) throw ValidationError("epsilon-greedy probability needs a Q matrix");
      const double base = policy.epsilon / n_actions;
      return q->greedy(state) == action ? 1.0 - policy.epsilon + base : base;
    }
    case PolicyKind::ucb:
      break;
  }
  throw ValidationError("UCB selection has no stationary action distribution");
}

StochasticPolicy action_distribution(const PolicySpec& policy, int n_states, int n_actions,
                                     const QTable* q) {
  StochasticPolicy out{n_states, n_actions,
                       std::vector<double>(static_cast<std::size_t>(n_states) * n_actions)};
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      out.probs[static_cast<std::size_t>(s) * n_actions + a] =
          action_probability(policy, s, a, n_actions, q);
    }
  }
  return out;
}

int select_action(const PolicySpec& policy, int state, int n_actions, const QTable* q,
                  const VisitCounts* counts, Rng& rng) {
  if (n_actions <= 0) throw ValidationError("select_action: empty action set");
  switch (policy.kind) {
    case PolicyKind::deterministic:
      return policy.table.at(state);
    case PolicyKind::epsilon_perturbed: {
      const int best = policy.table.at(state);
      if (n_actions == 1 || rng.uniform() >= policy.epsilon) return best;
      // Uniform over the |A| - 1 other actions.
      const int pick = static_cast<int>(rng.below(static_cast<std::size_t>(n_actions - 1)));
      return pick < best ? pick : pick + 1;
    }
    case PolicyKind::epsilon_greedy: {
      if (q == nullptr) throw ValidationError("select_action: epsilon-greedy needs a Q matrix");
      if (rng.uniform() < policy.epsilon) {
        return static_cast<int>(rng.below(static_cast<std::size_t>(n_actions)));
      }
      return q->greedy(state);
    }
    case PolicyKind::ucb: {
      if (q == nullptr || counts == nullptr) {
        throw ValidationError("select_action: UCB needs a Q matrix and visit counts");
      }
      for (int b = 0; b < n_actions; ++b) {
        if (counts->pair(state, b) == 0) return b;
      }
      const double log_n = std::log(static_cast<double>(counts->state(state)));
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < n_actions; ++b) {
        const double score =
            (*q)(state, b) +
            policy.ucb_constant * std::sqrt(log_n / static_cast<double>(counts->pair(state, b)));
        if (score > best_score) {
          best_score = score;
          best = b;
        }
      }
      return best;
    }
  }
  return 0;
}

int sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // u landed in the rounding slack above the last cumulative sum.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

Transition step(const MdpModel& model, int state, int action, Rng& rng) {
  return {sample_index(model.row(state, action), rng.uniform()), model.reward(state, action)};
}

std::vector<double> bellman_backup(const MdpModel& model, std::span<const double> values) {
  std::vector<double> out(model.n_states());
  for (int s = 0; s < model.n_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.n_actions(); ++a) {
      double future = 0.0;
      auto r = model.row(s, a);
      for (int n = 0; n < model.n_states(); ++n) future += r[n] * values[n];
      best = std::max(best, model.reward(s, a) + model.discount() * future);
    }
    out[s] = best;
  }
  return out;
}

QTable action_values(const MdpModel& model, std::span<const double> values) {
  QTable q(model.n_states(), model.n_actions());
  for (int s = 0; s < model.n_states(); ++s) {
    for (int a = 0; a < model.n_actions(); ++a) {
      double future = 0.0;
      auto r = model.row(s, a);
      for (int n = 0; n < model.n_states(); ++n) future += r[n] * values[n];
      q(s, a) = model.reward(s, a) + model.discount() * future;
    }
  }
  return q;
}

PlanningResult value_iteration(const MdpModel& model, double tolerance) {
  if (!(tolerance > 0.0)) throw ValidationError("value_iteration: tolerance must be positive");
  const double gamma = model.discount();
  const double threshold = gamma > 0.0 ? tolerance * (1.0 - gamma) / (2.0 * gamma) : 0.0;
  std::vector<double> values(model.n_states(), 0.0);
  PlanningResult result;
  for (;;) {
    std::vector<double> next = bellman_backup(model, values);
    double change = 0.0;
    for (int s = 0; s < model.n_states(); ++s) change = std::max(change, std::abs(next[s] - values[s]));
    values = std::move(next);
    ++result.iterations;
    if (change <= threshold) break;
  }
  const QTable q = action_values(model, values);
  std::vector<int> greedy(model.n_states());
  for (int s = 0; s < model.n_states(); ++s) greedy[s] = q.greedy(s);
  result.values = std::move(values);
  result.policy = PolicySpec::deterministic(std::move(greedy));
  return result;
}

std::vector<double> induced_chain(const MdpModel& model, const StochasticPolicy& policy) {
  const int n = model.n_states();
  std::vector<double> chain(static_cast<std::size_t>(n) * n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < model.n_actions(); ++a) {
      const double pa = policy(s, a);
      if (pa == 0.0) continue;
      auto r = model.row(s, a);
      for (int k = 0; k < n; ++k) chain[static_cast<std::size_t>(s) * n + k] += pa * r[k];
    }
  }
  return chain;
}

namespace {

std::vector<double> expected_rewards(const MdpModel& model, const StochasticPolicy& policy) {
  std::vector<double> r(model.n_states(), 0.0);
  for (int s = 0; s < model.n_states(); ++s) {
    for (int a = 0; a < model.n_actions(); ++a) r[s] += policy(s, a) * model.reward(s, a);
  }
  return r;
}

void check_policy_shape(const MdpModel& model, const StochasticPolicy& policy) {
  if (policy.n_states != model.n_states() || policy.n_actions != model.n_actions()) {
    throw ValidationError("policy shape does not match the model");
  }
}

}  // namespace

std::vector<double> policy_evaluation(const MdpModel& model, const StochasticPolicy& policy) {
  check_policy_shape(model, policy);
  const int n = model.n_states();
  const auto chain = induced_chain(model, policy);
  const auto r = expected_rewards(model, policy);
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (int s = 0; s < n; ++s) {
    rhs(s) = r[s];
    for (int k = 0; k < n; ++k) lhs(s, k) -= model.discount() * chain[static_cast<std::size_t>(s) * n + k];
  }
  const Eigen::VectorXd v = lhs.partialPivLu().solve(rhs);
  return {v.data(), v.data() + n};
}

std::vector<double> policy_evaluation(const MdpModel& model, const PolicySpec& policy) {
  if (policy.kind != PolicyKind::deterministic) {
    throw ValidationError("policy_evaluation: expected a deterministic policy");
  }
  policy.validate(model.n_states(), model.n_actions());
  return policy_evaluation(model, StochasticPolicy::from_deterministic(policy.table, model.n_actions()));
}

std::vector<double> finite_horizon_value(const MdpModel& model, const StochasticPolicy& policy,
                                         long horizon, double discount) {
  check_policy_shape(model, policy);
  const int n = model.n_states();
  const auto chain = induced_chain(model, policy);
  const auto r = expected_rewards(model, policy);
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n);
  for (long k = 0; k < horizon; ++k) {
    for (int s = 0; s < n; ++s) {
      double future = 0.0;
      for (int j = 0; j < n; ++j) future += chain[static_cast<std::size_t>(s) * n + j] * v[j];
      next[s] = r[s] + discount * future;
    }
    std::swap(v, next);
  }
  return v;
}

std::vector<double> stationary_distribution(const MdpModel& model,
                                            const StochasticPolicy& policy) {
  check_policy_shape(model, policy);
  const int n = model.n_states();
  const auto chain = induced_chain(model, policy);
  // Solve pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(j, i) = chain[static_cast<std::size_t>(i) * n + j] - (i == j ? 1.0 : 0.0);
    }
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  a.row(n - 1).setOnes();
  b(n - 1) = 1.0;
  const Eigen::VectorXd pi = a.fullPivLu().solve(b);
  std::vector<double> out(pi.data(), pi.data() + n);
  for (double& p : out) p = std::max(p, 0.0);
  return out;
}

double discounted_return(std::span<const double> rewards, double discount) {
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= discount;
  }
  return total;
}

void TrajectoryBuffer::push(const ExperienceTuple& tuple, int action) {
  if (!tuples_.empty() && tuple.epoch != tuples_.back().epoch + 1) {
    throw ValidationError("TrajectoryBuffer: epochs must be consecutive");
  }
  tuples_.push_back(tuple);
  actions_.push_back(action);
}

std::vector<double> TrajectoryBuffer::rewards() const {
  std::vector<double> out;
  out.reserve(tuples_.size());
  for (const auto& t : tuples_) out.push_back(t.reward);
  return out;
}

std::span<const ExperienceTuple> TrajectoryBuffer::since(long epoch) const {
  if (tuples_.empty()) return {};
  const long first = tuples_.front().epoch;
  const auto offset = static_cast<std::size_t>(std::clamp(epoch - first, 0L, static_cast<long>(tuples_.size())));
  return std::span<const ExperienceTuple>(tuples_).subspan(offset);
}

}  // namespace nsrl
