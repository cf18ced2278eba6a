#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsrl/agents.hpp"
#include "nsrl/envs.hpp"
#include "nsrl/metrics.hpp"
#include "nsrl/quickest.hpp"
#include "nsrl/traffic.hpp"
#include "nsrl/ucrl2.hpp"

namespace nsrl {

enum class EnvKind { random_mdp, sensor, traffic };

struct EnvironmentSpec {
  EnvKind kind = EnvKind::random_mdp;
  // random_mdp
  int n_states = 5;
  int n_actions = 5;
  int n_contexts = 2;
  double reward_low = 0.0;
  double reward_high = 1.0;
  double discount = 0.9;
  // sensor: one harvest rate per context
  SensorConfig sensor;
  std::vector<double> energy_rates{2.0, 0.5};
  // traffic: one per-lane arrival-rate vector per context
  TrafficConfig traffic;
  std::vector<std::array<double, TrafficConfig::kLanes>> lane_rates{{0.05, 0.05, 0.05, 0.05},
                                                                    {0.25, 0.25, 0.25, 0.25}};

  int context_count() const;
};

struct ScheduleSpec {
  std::vector<long> changepoints{1000};
  std::vector<int> contexts{0, 1};
  long horizon = 2000;

  ChangepointSchedule build() const { return {changepoints, contexts, horizon}; }
};

enum class AgentKind { ql, context_ql, ruql, ucrl2, switcher, sr_two_threshold, p_cdm, np_cdm };

AgentKind parse_agent_kind(const std::string& name);
std::string to_string(AgentKind kind);

struct AgentSpec {
  AgentKind kind = AgentKind::ql;
  std::string label;  // defaults to the kind name
  LearnerConfig learner;
  double epsilon = 0.1;  // switcher
  std::optional<ExperienceDetectorConfig> detector;  // overrides the experiment default
  Ucrl2Config ucrl2;
  double sr_lower = 500.0;
  double sr_upper = 1000.0;
  CdmConfig cdm;

  std::string display_name() const { return label.empty() ? to_string(kind) : label; }
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvironmentSpec environment;
  ScheduleSpec schedule;
  std::vector<AgentSpec> agents;
  ExperienceDetectorConfig detector;
  int runs = 20;
  std::uint64_t seed = 1;
  /// Replay the schedule with frozen greedy policies after learning.
  bool evaluate = false;
  std::vector<long> precision_windows{100};
  bool compute_regret = false;
  RegretOptions regret;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct RunRecord {
  std::string agent;
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<long> detections;
  double reward = 0.0;             // undiscounted sum over the learning phase
  double discounted_reward = 0.0;  // discounted by the global epoch
  std::optional<double> regret;
  std::optional<double> eval_reward;  // undiscounted sum over the evaluation phase
  std::vector<PrecisionRecall> precision;  // one per precision window
  int q_tables = 0;

  std::optional<long> tau_star() const {
    return detections.empty() ? std::nullopt : std::optional<long>(detections.front());
  }
};

struct AgentAggregate {
  std::string agent;
  SummaryStats reward;
  SummaryStats discounted_reward;
  std::optional<SummaryStats> tau_star;  // over runs with a detection
  std::optional<SummaryStats> regret;
  std::optional<SummaryStats> eval_reward;
  std::vector<PrecisionRecall> precision;  // pooled, one per window
  int runs_with_detection = 0;
};

struct MetricsReport {
  std::string name;
  std::uint64_t seed = 0;
  int runs = 0;
  std::vector<long> precision_windows;
  std::vector<RunRecord> records;  // ordered by agent, then run
  std::vector<AgentAggregate> aggregates;

  const AgentAggregate& aggregate(const std::string& agent) const;
  std::vector<const RunRecord*> records_of(const std::string& agent) const;
};

/// Seed of run r: mix of (master, r); each run draws its contexts, dynamics
/// and agent streams from sub-streams of that seed, so all agents of one run
/// face the same contexts and the report does not depend on thread count.
std::uint64_t run_seed(std::uint64_t master, int run);

RunRecord run_single(const ExperimentConfig& config, const AgentSpec& agent, int run, std::uint64_t master_seed);

MetricsReport run_experiment(const ExperimentConfig& config, std::uint64_t master_seed);

AgentAggregate aggregate_records(const std::string& agent, const std::vector<const RunRecord*>& records,
                                 std::size_t n_windows);

}  // namespace nsrl
