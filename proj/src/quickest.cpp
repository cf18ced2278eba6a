#include "nsrl/quickest.hpp"

#include <algorithm>
#include <cmath>

#include "nsrl/error.hpp"

namespace nsrl {

double smoothed_probability(std::span<const double> row, int next) {
  return (row[next] + kProbabilitySmoothing) / (1.0 + static_cast<double>(row.size()) * kProbabilitySmoothing);
}

double transition_kl(const MdpModel& pre, const MdpModel& post, int s, int a) {
  const auto p0 = pre.row(s, a);
  const auto p1 = post.row(s, a);
  double kl = 0.0;
  for (int k = 0; k < pre.n_states(); ++k) {
    const double q1 = smoothed_probability(p1, k);
    kl += q1 * std::log(q1 / smoothed_probability(p0, k));
  }
  return kl;
}

PolicySpec kl_policy(const MdpModel& pre, const MdpModel& post) {
  if (!pre.same_shape(post)) throw ValidationError("kl_policy: models must share S and A");
  std::vector<int> table(pre.n_states(), 0);
  for (int s = 0; s < pre.n_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < pre.n_actions(); ++a) {
      const double kl = transition_kl(pre, post, s, a);
      // Rows equal up to rounding count as ties.
      if (kl > best + 1e-12) {
        best = kl;
        table[s] = a;
      }
    }
  }
  return PolicySpec::deterministic(std::move(table));
}

SrPhase sr_phase(double statistic, double lower, double upper) {
  if (statistic >= upper) return SrPhase::follow_post;
  if (statistic >= lower) return SrPhase::follow_kl;
  return SrPhase::follow_pre;
}

SrState sr_advance(SrState state, double ratio) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) throw ValidationError("sr: likelihood ratio must be finite and >= 0");
  state.statistic = (1.0 + state.statistic) * ratio;
  state.phase = sr_phase(state.statistic, state.lower, state.upper);
  return state;
}

SrState sr_update(SrState state, const ExperienceTuple& t, int action, const MdpModel& pre, const MdpModel& post) {
  const double num = smoothed_probability(post.row(t.state, action), t.next_state);
  const double den = smoothed_probability(pre.row(t.state, action), t.next_state);
  return sr_advance(state, num / den);
}

TwoThresholdSwitcher::TwoThresholdSwitcher(const MdpModel& pre, const MdpModel& post, double lower, double upper,
                                           double vi_tolerance)
    : pre_(pre), post_(post), pi_pre_(value_iteration(pre, vi_tolerance).policy.table),
      pi_kl_(kl_policy(pre, post).table), pi_post_(value_iteration(post, vi_tolerance).policy.table) {
  if (!(lower <= upper) || lower < 0.0) throw ConfigError("sr: thresholds must satisfy 0 <= B <= A");
  sr_.lower = lower;
  sr_.upper = upper;
}

int TwoThresholdSwitcher::act(int state) {
  switch (sr_.phase) {
    case SrPhase::follow_pre:
      return pi_pre_[state];
    case SrPhase::follow_kl:
      return pi_kl_[state];
    case SrPhase::follow_post:
      return pi_post_[state];
  }
  return 0;
}

void TwoThresholdSwitcher::observe(const ExperienceTuple& t, int action) {
  if (sr_.phase == SrPhase::follow_post) return;
  sr_ = sr_update(sr_, t, action, pre_, post_);
  if (sr_.phase == SrPhase::follow_post) detections_.push_back({t.epoch + 1, sr_.statistic, 0.0});
}

AgentReport TwoThresholdSwitcher::report() const { return {detections_, 0}; }

ChainModel ChainModel::of(const MdpModel& model, const std::vector<int>& policy) {
  const auto pi = StochasticPolicy::from_deterministic(policy, model.n_actions());
  return {model.n_states(), induced_chain(model, pi), stationary_distribution(model, pi)};
}

double ChainModel::log_prob(int s, int next) const {
  return std::log(smoothed_probability(
      std::span<const double>(transition.data() + static_cast<std::size_t>(s) * n_states, n_states), next));
}

double ChainModel::log_initial(int s) const { return std::log(smoothed_probability(stationary, s)); }

bool cusum_advance(CusumState& state, double llr) {
  const int sign = (llr > 0.0) - (llr < 0.0);
  state.m = std::max(0L, state.m + sign);
  return state.m >= state.threshold;
}

bool block_log_ratio(std::span<const int> block, const ChainModel& pre, const ChainModel& post, double& llr) {
  if (block.empty()) return false;
  llr = post.log_initial(block[0]) - pre.log_initial(block[0]);
  for (std::size_t k = 0; k + 1 < block.size(); ++k) {
    const int s = block[k];
    const int n = block[k + 1];
    const std::size_t at = static_cast<std::size_t>(s) * pre.n_states + n;
    if (pre.transition[at] == 0.0 && post.transition[at] == 0.0) return false;
    llr += post.log_prob(s, n) - pre.log_prob(s, n);
  }
  return true;
}

CdmResult cdm_detect(std::span<const int> states, const std::vector<ChainModel>& chains,
                     const std::vector<int>& pattern, const CdmConfig& config, Rng& rng) {
  if (pattern.size() < 2) throw ConfigError("cdm: the pattern needs at least two contexts");
  if (config.threshold < 1 || config.block_length < 2 || config.max_gap < 0) {
    throw ConfigError("cdm: threshold >= 1, block_length >= 2 and max_gap >= 0 required");
  }
  for (int label : pattern) {
    if (label < 0 || label >= static_cast<int>(chains.size())) throw ConfigError("cdm: unknown context label");
  }
  CdmResult out;
  CusumState cusum{0, config.threshold};
  std::size_t position = 0;
  long excursion_start = 0;
  const long n = static_cast<long>(states.size());
  long start = config.randomized ? static_cast<long>(rng.below(config.max_gap + 1)) : 0;
  while (start + config.block_length <= n) {
    const ChainModel& pre = chains[pattern[position % pattern.size()]];
    const ChainModel& post = chains[pattern[(position + 1) % pattern.size()]];
    double llr = 0.0;
    if (block_log_ratio(states.subspan(start, config.block_length), pre, post, llr)) {
      const long before = cusum.m;
      const bool alarm = cusum_advance(cusum, llr);
      if (before == 0 && cusum.m > 0) excursion_start = start;
      if (alarm) {
        out.detections.push_back(excursion_start);
        out.alarms.push_back(start + config.block_length);
        cusum.m = 0;
        ++position;
      }
    } else {
      ++out.skipped_blocks;
    }
    start += config.block_length;
    if (config.randomized) start += static_cast<long>(rng.below(config.max_gap + 1));
  }
  return out;
}

std::vector<int> simulate_chain_stream(const std::vector<ChainModel>& chains, const ChangepointSchedule& schedule,
                                       int initial_state, Rng& rng) {
  std::vector<int> out;
  out.reserve(schedule.horizon());
  int s = initial_state;
  for (long t = 0; t < schedule.horizon(); ++t) {
    out.push_back(s);
    const ChainModel& c = chains.at(schedule.context_at(t));
    s = sample_index(std::span<const double>(c.transition.data() + static_cast<std::size_t>(s) * c.n_states, c.n_states),
                     rng.uniform());
  }
  return out;
}

}  // namespace nsrl
