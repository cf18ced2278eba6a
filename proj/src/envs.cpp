#include "nsrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nsrl/error.hpp"

namespace nsrl {

ChangepointSchedule::ChangepointSchedule(std::vector<long> changepoints, std::vector<int> contexts,
                                         long horizon)
    : changepoints_(std::move(changepoints)), contexts_(std::move(contexts)), horizon_(horizon) {
  if (changepoints_.empty()) throw ValidationError("schedule: at least one changepoint is required");
  if (contexts_.size() != changepoints_.size() + 1) {
    throw ValidationError("schedule: need exactly one more context than changepoints");
  }
  long prev = 0;
  for (long t : changepoints_) {
    if (t <= prev) throw ValidationError("schedule: changepoints must increase strictly from > 0");
    prev = t;
  }
  if (changepoints_.back() >= horizon_) throw ValidationError("schedule: last changepoint must precede the horizon");
  for (std::size_t j = 0; j < contexts_.size(); ++j) {
    if (contexts_[j] < 0) throw ValidationError("schedule: negative context label");
    if (j > 0 && contexts_[j] == contexts_[j - 1]) {
      throw ValidationError("schedule: consecutive contexts must differ");
    }
  }
}

ChangepointSchedule ChangepointSchedule::stationary(int context, long horizon) {
  if (horizon <= 0) throw ValidationError("schedule: horizon must be positive");
  ChangepointSchedule s;
  s.contexts_ = {context};
  s.horizon_ = horizon;
  return s;
}

std::size_t ChangepointSchedule::segment_at(long t) const {
  // Segment j covers T_{j-1} <= t < T_j.
  return static_cast<std::size_t>(
      std::upper_bound(changepoints_.begin(), changepoints_.end(), t) - changepoints_.begin());
}

int ChangepointSchedule::distinct_contexts() const {
  return static_cast<int>(std::set<int>(contexts_.begin(), contexts_.end()).size());
}

NonStationaryEnv::NonStationaryEnv(std::vector<MdpModel> contexts, ChangepointSchedule schedule,
                                   Rng rng, int initial_state)
    : contexts_(std::move(contexts)), schedule_(std::move(schedule)), rng_(rng), state_(initial_state) {
  if (contexts_.empty()) throw ValidationError("NonStationaryEnv: no contexts");
  for (const auto& m : contexts_) {
    if (!m.same_shape(contexts_.front()) || m.discount() != contexts_.front().discount()) {
      throw ValidationError("NonStationaryEnv: contexts must share S, A and discount");
    }
  }
  for (int c : schedule_.contexts()) {
    if (c >= static_cast<int>(contexts_.size())) throw ValidationError("NonStationaryEnv: unknown context label");
  }
  if (state_ < 0 || state_ >= n_states()) throw ValidationError("NonStationaryEnv: bad initial state");
}

std::optional<ExperienceTuple> NonStationaryEnv::step(int action) {
  if (clock_ >= schedule_.horizon()) return std::nullopt;
  if (action < 0 || action >= n_actions()) throw ValidationError("NonStationaryEnv: action out of range");
  const Transition tr = nsrl::step(active_model(), state_, action, rng_);
  ExperienceTuple out{state_, tr.reward, tr.next_state, clock_};
  state_ = tr.next_state;
  ++clock_;
  return out;
}

MdpModel generate_random_mdp(int n_states, int n_actions, double discount, Rng& rng,
                             double reward_low, double reward_high) {
  if (n_states < 2 || n_actions < 2) throw ValidationError("generate_random_mdp: need |S|, |A| >= 2");
  const auto n_sa = static_cast<std::size_t>(n_states) * n_actions;
  std::vector<double> p(n_sa * n_states);
  for (std::size_t row = 0; row < n_sa; ++row) {
    double sum = 0.0;
    for (int k = 0; k < n_states; ++k) {
      const double e = rng.exponential();
      p[row * n_states + k] = e;
      sum += e;
    }
    for (int k = 0; k < n_states; ++k) p[row * n_states + k] /= sum;
  }
  std::vector<double> r(n_sa);
  for (double& x : r) x = reward_low + (reward_high - reward_low) * rng.uniform();
  const double bound = std::max(std::abs(reward_low), std::abs(reward_high));
  return MdpModel(n_states, n_actions, std::move(p), std::move(r), discount, bound);
}

void SensorConfig::validate() const {
  if (energy_capacity < 1 || data_capacity < 1) throw ValidationError("sensor: capacities must be >= 1");
  if (!(lambda_energy > 0.0) || !(lambda_data > 0.0)) throw ValidationError("sensor: arrival rates must be positive");
  if (max_transmit < 1) throw ValidationError("sensor: max_transmit must be >= 1");
  if (!(throughput_scale > 0.0)) throw ValidationError("sensor: throughput scale must be positive");
}

int sensor_throughput(int energy, double throughput_scale) {
  return static_cast<int>(std::floor(throughput_scale * std::log1p(static_cast<double>(energy))));
}

std::vector<double> truncated_poisson(double mean, int cap) {
  std::vector<double> pmf(cap + 1, 0.0);
  double term = std::exp(-mean);
  double acc = 0.0;
  for (int k = 0; k < cap; ++k) {
    pmf[k] = term;
    acc += term;
    term *= mean / (k + 1);
  }
  pmf[cap] = std::max(0.0, 1.0 - acc);
  return pmf;
}

MdpModel build_sensor_mdp(const SensorConfig& c) {
  c.validate();
  const int n_e = c.energy_capacity + 1;
  const int n_d = c.data_capacity + 1;
  const int n_states = n_e * n_d;
  const int n_actions = c.max_transmit + 1;
  std::vector<double> p(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  std::vector<double> r(static_cast<std::size_t>(n_states) * n_actions, 0.0);

  for (int e = 0; e < n_e; ++e) {
    for (int d = 0; d < n_d; ++d) {
      const int s = sensor_state_index(c, e, d);
      for (int a = 0; a < n_actions; ++a) {
        const int used = std::min(a, e);
        const int sent = std::min(d, sensor_throughput(used, c.throughput_scale));
        const int queue = d - sent;
        r[static_cast<std::size_t>(s) * n_actions + a] = -static_cast<double>(queue);
        const auto energy_in = truncated_poisson(c.lambda_energy, c.energy_capacity - (e - used));
        const auto data_in = truncated_poisson(c.lambda_data, c.data_capacity - queue);
        double* row = p.data() + (static_cast<std::size_t>(s) * n_actions + a) * n_states;
        for (std::size_t ie = 0; ie < energy_in.size(); ++ie) {
          for (std::size_t id = 0; id < data_in.size(); ++id) {
            const int next = sensor_state_index(c, e - used + static_cast<int>(ie), queue + static_cast<int>(id));
            row[next] += energy_in[ie] * data_in[id];
          }
        }
      }
    }
  }
  return MdpModel(n_states, n_actions, std::move(p), std::move(r), c.discount,
                  static_cast<double>(c.data_capacity));
}

}  // namespace nsrl
