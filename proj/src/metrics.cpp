#include "nsrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "nsrl/error.hpp"

namespace nsrl {

SummaryStats detection_stats(std::span<const double> values) {
  if (values.empty()) throw ValidationError("detection_stats: no values");
  SummaryStats out;
  out.count = values.size();
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  out.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return out;
}

PrecisionRecall precision_recall(std::span<const long> detected, std::span<const long> truth, long window) {
  if (window <= 0) throw ValidationError("precision_recall: window must be positive");
  std::vector<std::tuple<long, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < detected.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const long dist = std::abs(detected[i] - truth[j]);
      if (dist <= window) pairs.emplace_back(dist, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> used_d(detected.size(), false), used_t(truth.size(), false);
  PrecisionRecall out;
  out.detected = static_cast<long>(detected.size());
  out.truth = static_cast<long>(truth.size());
  for (const auto& [dist, i, j] : pairs) {
    if (used_d[i] || used_t[j]) continue;
    used_d[i] = used_t[j] = true;
    ++out.true_positives;
  }
  out.precision = detected.empty() ? 1.0 : static_cast<double>(out.true_positives) / out.detected;
  out.recall = truth.empty() ? 1.0 : static_cast<double>(out.true_positives) / out.truth;
  return out;
}

PrecisionRecall pool(std::span<const PrecisionRecall> runs) {
  PrecisionRecall out;
  for (const auto& r : runs) {
    out.true_positives += r.true_positives;
    out.detected += r.detected;
    out.truth += r.truth;
  }
  out.precision = out.detected == 0 ? 1.0 : static_cast<double>(out.true_positives) / out.detected;
  out.recall = out.truth == 0 ? 1.0 : static_cast<double>(out.true_positives) / out.truth;
  return out;
}

namespace {

// Backward induction over [begin, end) with the rule in force at each epoch.
std::vector<double> played_value(const MdpModel& model, std::span<const PlayedPolicy> played, long begin, long end,
                                 double discount) {
  const int n = model.n_states();
  std::vector<double> v(n, 0.0), next(n), chain, reward(n);
  std::size_t k = played.size();
  for (long t = end - 1; t >= begin; --t) {
    std::size_t in_force = played.size();
    while (in_force > 0 && played[in_force - 1].from > t) --in_force;
    if (in_force == 0) throw ValidationError("regret: no played rule covers epoch " + std::to_string(t));
    if (in_force - 1 != k) {
      k = in_force - 1;
      const auto pi = action_distribution(played[k].policy, n, model.n_actions());
      chain = induced_chain(model, pi);
      for (int s = 0; s < n; ++s) {
        reward[s] = 0.0;
        for (int a = 0; a < model.n_actions(); ++a) reward[s] += pi(s, a) * model.reward(s, a);
      }
    }
    for (int s = 0; s < n; ++s) {
      double future = 0.0;
      for (int j = 0; j < n; ++j) future += chain[static_cast<std::size_t>(s) * n + j] * v[j];
      next[s] = reward[s] + discount * future;
    }
    std::swap(v, next);
  }
  return v;
}

}  // namespace

double regret(std::span<const ExperienceTuple> trajectory, const std::vector<MdpModel>& contexts,
              const ChangepointSchedule& schedule, const RegretOptions& options,
              std::span<const PlayedPolicy> played) {
  if (contexts.empty()) throw UnsupportedOperation("regret needs the context models; it is undefined model-free");
  if (trajectory.empty()) return 0.0;
  const long first = trajectory.front().epoch;
  double total = 0.0;
  for (std::size_t j = 0; j < schedule.segment_count(); ++j) {
    const long begin = std::max(schedule.segment_begin(j), first);
    const long end = std::min(schedule.segment_end(j), first + static_cast<long>(trajectory.size()));
    if (begin >= end) continue;
    const MdpModel& model = contexts.at(schedule.contexts()[j]);
    const auto optimal = value_iteration(model, 1e-10).policy.table;
    const StochasticPolicy oracle = action_distribution(
        PolicySpec::epsilon_perturbed(optimal, options.oracle_epsilon), model.n_states(), model.n_actions());
    const double weight = options.global_clock ? std::pow(options.discount, static_cast<double>(begin)) : 1.0;
    const auto& start = trajectory[begin - first];
    const double oracle_value =
        weight * finite_horizon_value(model, oracle, end - begin, options.discount)[start.state];
    double realised = 0.0;
    if (played.empty()) {
      for (long t = begin; t < end; ++t) {
        const long exponent = options.global_clock ? t : t - begin;
        realised += std::pow(options.discount, static_cast<double>(exponent)) * trajectory[t - first].reward;
      }
    } else {
      realised = weight * played_value(model, played, begin, end, options.discount)[start.state];
    }
    total += oracle_value - realised;
  }
  return total;
}

}  // namespace nsrl
