#include "nsrl/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "nsrl/error.hpp"

namespace nsrl {

namespace {

int ceil_div(int num, int den) { return (num + den - 1) / den; }

int served(int duration, double service_rate) {
  return static_cast<int>(std::floor(duration * service_rate + 1e-9));
}

}  // namespace

void TrafficConfig::validate() const {
  if (lane_capacity < 3) throw ValidationError("traffic: lane capacity must be >= 3");
  for (double r : arrival_rates) {
    if (!(r > 0.0)) throw ValidationError("traffic: arrival rates must be positive");
  }
  if (green_durations.size() != 11) throw ValidationError("traffic: expected the 11 green durations 20..70");
  for (std::size_t i = 0; i < green_durations.size(); ++i) {
    if (green_durations[i] != 20 + 5 * static_cast<int>(i)) {
      throw ValidationError("traffic: green durations must be 20, 25, ..., 70");
    }
  }
  if (!(service_rate > 0.0)) throw ValidationError("traffic: service rate must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) throw ValidationError("traffic: discount must lie in [0, 1)");
}

int aggregate_level(int queue, int capacity) {
  if (queue >= ceil_div(2 * capacity, 3)) return 2;
  if (queue >= ceil_div(capacity, 3)) return 1;
  return 0;
}

int traffic_state_index(const std::array<int, TrafficConfig::kLanes>& levels, int phase) {
  int idx = 0;
  for (int l : levels) idx = idx * TrafficConfig::kLevels + l;
  return idx * TrafficConfig::kPhases + phase;
}

TrafficSimulator::TrafficSimulator(TrafficConfig config) : config_(std::move(config)) {
  config_.validate();
}

int TrafficSimulator::observed_state() const {
  std::array<int, TrafficConfig::kLanes> levels{};
  for (int l = 0; l < TrafficConfig::kLanes; ++l) levels[l] = aggregate_level(queues_[l], config_.lane_capacity);
  return traffic_state_index(levels, phase_);
}

void TrafficSimulator::set_state(const Queues& queues, int phase) {
  for (int q : queues) {
    if (q < 0 || q > config_.lane_capacity) throw ValidationError("traffic: queue outside [0, capacity]");
  }
  if (phase < 0 || phase >= TrafficConfig::kPhases) throw ValidationError("traffic: bad phase");
  queues_ = queues;
  phase_ = phase;
}

int TrafficSimulator::advance(int action, Rng& rng) {
  const int duration = config_.green_durations.at(static_cast<std::size_t>(action));
  auto& green = queues_[phase_];
  green -= std::min(green, served(duration, config_.service_rate));
  int cost = 0;
  for (int l = 0; l < TrafficConfig::kLanes; ++l) {
    const int arrivals = rng.poisson(config_.arrival_rates[l] * duration);
    queues_[l] = std::min(config_.lane_capacity, queues_[l] + arrivals);
    cost += queues_[l];
  }
  phase_ = (phase_ + 1) % TrafficConfig::kPhases;
  return cost;
}

TrafficEnv::TrafficEnv(TrafficConfig base,
                       std::vector<std::array<double, TrafficConfig::kLanes>> context_rates,
                       ChangepointSchedule schedule, Rng rng)
    : sim_(std::move(base)), context_rates_(std::move(context_rates)), schedule_(std::move(schedule)), rng_(rng) {
  for (int c : schedule_.contexts()) {
    if (c < 0 || c >= static_cast<int>(context_rates_.size())) {
      throw ValidationError("TrafficEnv: unknown context label");
    }
  }
  for (const auto& rates : context_rates_) {
    for (double r : rates) {
      if (!(r > 0.0)) throw ValidationError("TrafficEnv: arrival rates must be positive");
    }
  }
}

std::optional<ExperienceTuple> TrafficEnv::step(int action) {
  if (clock_ >= schedule_.horizon()) return std::nullopt;
  if (action < 0 || action >= n_actions()) throw ValidationError("TrafficEnv: action out of range");
  sim_.set_arrival_rates(context_rates_[schedule_.context_at(clock_)]);
  const int s = sim_.observed_state();
  const int cost = sim_.advance(action, rng_);
  ExperienceTuple out{s, -static_cast<double>(cost), sim_.observed_state(), clock_};
  ++clock_;
  return out;
}

MdpModel build_traffic_mdp(const TrafficConfig& c) {
  c.validate();
  constexpr int L = TrafficConfig::kLanes;
  constexpr int K = TrafficConfig::kLevels;
  const int cap = c.lane_capacity;
  const int lo1 = ceil_div(cap, 3);
  const int lo2 = ceil_div(2 * cap, 3);
  const std::array<int, K> level_lo{0, lo1, lo2};
  const std::array<int, K> level_hi{lo1 - 1, lo2 - 1, cap};

  const int n_states = TrafficConfig::state_count();
  const int n_actions = static_cast<int>(c.green_durations.size());
  std::vector<double> p(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  std::vector<double> r(static_cast<std::size_t>(n_states) * n_actions, 0.0);

  // lane_next[lane][level][green?][action] -> (next-level pmf, expected queue)
  struct LaneOutcome {
    std::array<double, K> level{};
    double mean_queue = 0.0;
  };
  auto lane_outcome = [&](int lane, int level, bool green, int action) {
    LaneOutcome out;
    const int duration = c.green_durations[action];
    const auto arrivals = truncated_poisson(c.arrival_rates[lane] * duration, cap);
    const int width = level_hi[level] - level_lo[level] + 1;
    for (int q = level_lo[level]; q <= level_hi[level]; ++q) {
      const int after = green ? q - std::min(q, served(duration, c.service_rate)) : q;
      for (int k = 0; k <= cap; ++k) {
        if (arrivals[k] == 0.0) continue;
        const int next = std::min(cap, after + k);
        const double w = arrivals[k] / width;
        out.level[aggregate_level(next, cap)] += w;
        out.mean_queue += w * next;
      }
    }
    return out;
  };

  for (int s = 0; s < n_states; ++s) {
    const int phase = s % TrafficConfig::kPhases;
    std::array<int, L> levels{};
    int rest = s / TrafficConfig::kPhases;
    for (int l = L - 1; l >= 0; --l) {
      levels[l] = rest % K;
      rest /= K;
    }
    const int next_phase = (phase + 1) % TrafficConfig::kPhases;
    for (int a = 0; a < n_actions; ++a) {
      std::array<LaneOutcome, L> lanes;
      double cost = 0.0;
      for (int l = 0; l < L; ++l) {
        lanes[l] = lane_outcome(l, levels[l], l == phase, a);
        cost += lanes[l].mean_queue;
      }
      r[static_cast<std::size_t>(s) * n_actions + a] = -cost;
      double* row = p.data() + (static_cast<std::size_t>(s) * n_actions + a) * n_states;
      for (int combo = 0; combo < 81; ++combo) {
        std::array<int, L> next{};
        int rem = combo;
        double prob = 1.0;
        for (int l = L - 1; l >= 0; --l) {
          next[l] = rem % K;
          rem /= K;
          prob *= lanes[l].level[next[l]];
        }
        row[traffic_state_index(next, next_phase)] += prob;
      }
    }
  }
  return MdpModel(n_states, n_actions, std::move(p), std::move(r), c.discount,
                  static_cast<double>(L * cap));
}

}  // namespace nsrl
