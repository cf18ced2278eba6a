#include "nsrl/ucrl2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nsrl/error.hpp"

namespace nsrl {

std::vector<long> ucrl2_restart_schedule(int known_changes, long horizon) {
  if (known_changes < 0) throw ConfigError("ucrl2: known_changes must be >= 0");
  const double l2 = std::pow(known_changes + 1.0, 2.0);
  std::vector<long> out;
  for (long i = 1;; ++i) {
    const long t = static_cast<long>(std::ceil(static_cast<double>(i) * i * i / l2));
    if (t >= horizon) break;
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  return out;
}

Ucrl2Model::Ucrl2Model(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions), n_(static_cast<std::size_t>(n_states) * n_actions, 0),
      reward_sum_(n_.size(), 0.0), transitions_(n_.size() * n_states, 0) {}

void Ucrl2Model::record(int s, int a, double reward01, int next) {
  ++n_[idx(s, a)];
  reward_sum_[idx(s, a)] += reward01;
  ++transitions_[idx(s, a) * n_states_ + next];
}

void Ucrl2Model::clear() {
  std::fill(n_.begin(), n_.end(), 0);
  std::fill(reward_sum_.begin(), reward_sum_.end(), 0.0);
  std::fill(transitions_.begin(), transitions_.end(), 0);
}

double Ucrl2Model::mean_reward(int s, int a) const {
  const long n = n_[idx(s, a)];
  return n > 0 ? reward_sum_[idx(s, a)] / static_cast<double>(n) : 0.0;
}

double Ucrl2Model::transition_estimate(int s, int a, int next) const {
  const long n = n_[idx(s, a)];
  return n > 0 ? static_cast<double>(transitions_[idx(s, a) * n_states_ + next]) / static_cast<double>(n) : 0.0;
}

OptimisticPlan Ucrl2Model::plan(long t, double delta, double span_tolerance, int max_iterations) const {
  const int S = n_states_;
  const int A = n_actions_;
  const double tt = static_cast<double>(std::max(1L, t));
  std::vector<double> r_opt(n_.size());
  std::vector<double> p_hat(n_.size() * S);
  std::vector<double> radius(n_.size());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double n = static_cast<double>(std::max(1L, n_[idx(s, a)]));
      r_opt[idx(s, a)] = std::min(1.0, mean_reward(s, a) + std::sqrt(7.0 * std::log(2.0 * S * A * tt / delta) / (2.0 * n)));
      radius[idx(s, a)] = std::sqrt(14.0 * S * std::log(2.0 * A * tt / delta) / n);
      for (int k = 0; k < S; ++k) p_hat[idx(s, a) * S + k] = transition_estimate(s, a, k);
    }
  }

  OptimisticPlan out;
  out.policy.assign(S, 0);
  std::vector<double> u(S, 0.0), next(S), p(S);
  std::vector<int> order(S);
  for (int it = 1; it <= max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return u[x] > u[y]; });
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        // Inner maximisation: shift up to radius/2 of mass onto the best state,
        // taking it from the worst states first.
        const double* ph = &p_hat[idx(s, a) * S];
        std::copy(ph, ph + S, p.begin());
        p[order[0]] = std::min(1.0, ph[order[0]] + radius[idx(s, a)] / 2.0);
        double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (int l = S - 1; l > 0 && total > 1.0; --l) {
          const int j = order[l];
          const double reduced = std::max(0.0, 1.0 - (total - p[j]));
          total += reduced - p[j];
          p[j] = reduced;
        }
        double v = r_opt[idx(s, a)];
        for (int k = 0; k < S; ++k) v += p[k] * u[k];
        // Equal optimistic values go to the less tried action, so optimism
        // still reaches untried actions once rewards clip at 1.
        if (v > best + 1e-12 || (v > best - 1e-12 && n_[idx(s, a)] < n_[idx(s, best_a)])) {
          best = v;
          best_a = a;
        }
      }
      next[s] = best;
      out.policy[s] = best_a;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int s = 0; s < S; ++s) {
      lo = std::min(lo, next[s] - u[s]);
      hi = std::max(hi, next[s] - u[s]);
    }
    const double base = *std::min_element(next.begin(), next.end());
    for (int s = 0; s < S; ++s) u[s] = next[s] - base;
    out.iterations = it;
    out.gain = 0.5 * (lo + hi);
    if (hi - lo < span_tolerance) break;
  }
  out.bias = u;
  return out;
}

Ucrl2Agent::Ucrl2Agent(const EnvInfo& env, Ucrl2Config config, long horizon)
    : env_(env), config_(std::move(config)), model_(env.n_states, env.n_actions),
      episode_counts_(static_cast<std::size_t>(env.n_states) * env.n_actions, 0),
      counts_at_episode_start_(episode_counts_.size(), 0) {
  if (!(config_.delta > 0.0 && config_.delta < 1.0)) throw ConfigError("ucrl2: delta must lie in (0, 1)");
  if (!(env.reward_high > env.reward_low)) throw ConfigError("ucrl2: empty reward range");
  restarts_at_ = config_.restart_epochs.empty() ? ucrl2_restart_schedule(config_.known_changes, horizon)
                                                : config_.restart_epochs;
}

void Ucrl2Agent::start_episode() {
  std::fill(episode_counts_.begin(), episode_counts_.end(), 0);
  for (int s = 0; s < env_.n_states; ++s) {
    for (int a = 0; a < env_.n_actions; ++a) {
      counts_at_episode_start_[static_cast<std::size_t>(s) * env_.n_actions + a] = model_.visits(s, a);
    }
  }
  const long t = since_restart_ + 1;
  plan_ = model_.plan(t, config_.delta, 1.0 / std::sqrt(static_cast<double>(t)), config_.evi_max_iterations);
  need_episode_ = false;
  ++episodes_;
}

int Ucrl2Agent::act(int state) {
  if (evaluating_ && !plan_.policy.empty()) return plan_.policy[state];
  while (next_restart_ < restarts_at_.size() && clock_ >= restarts_at_[next_restart_]) {
    model_.clear();
    since_restart_ = 0;
    need_episode_ = true;
    ++next_restart_;
    ++restarts_;
  }
  if (need_episode_) start_episode();
  return plan_.policy[state];
}

void Ucrl2Agent::observe(const ExperienceTuple& t, int action) {
  if (evaluating_) return;
  const double r01 = (t.reward - env_.reward_low) / (env_.reward_high - env_.reward_low);
  model_.record(t.state, action, std::clamp(r01, 0.0, 1.0), t.next_state);
  const std::size_t k = static_cast<std::size_t>(t.state) * env_.n_actions + action;
  ++episode_counts_[k];
  ++clock_;
  ++since_restart_;
  if (episode_counts_[k] >= std::max(1L, counts_at_episode_start_[k])) need_episode_ = true;
}

}  // namespace nsrl
