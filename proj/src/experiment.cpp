#include "nsrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "nsrl/error.hpp"

namespace nsrl {

namespace {

// Sub-stream tags under a run seed.
constexpr std::uint64_t kContexts = 1;
constexpr std::uint64_t kDynamics = 2;
constexpr std::uint64_t kAgent = 3;
constexpr std::uint64_t kDetector = 4;
constexpr std::uint64_t kEvalDynamics = 5;
constexpr std::uint64_t kEvalDetector = 6;

const char* const kAgentNames[] = {"ql", "context_ql", "ruql", "ucrl2", "switcher", "sr_two_threshold", "p_cdm", "np_cdm"};

std::vector<MdpModel> build_contexts(const EnvironmentSpec& env, std::uint64_t seed) {
  std::vector<MdpModel> out;
  switch (env.kind) {
    case EnvKind::random_mdp: {
      Rng rng = Rng::derive(seed, {kContexts});
      for (int c = 0; c < env.n_contexts; ++c) {
        out.push_back(generate_random_mdp(env.n_states, env.n_actions, env.discount, rng, env.reward_low,
                                          env.reward_high));
      }
      break;
    }
    case EnvKind::sensor:
      for (double rate : env.energy_rates) {
        SensorConfig c = env.sensor;
        c.lambda_energy = rate;
        out.push_back(build_sensor_mdp(c));
      }
      break;
    case EnvKind::traffic:
      break;  // hidden-queue simulator; models are not available to agents
  }
  return out;
}

std::unique_ptr<Environment> make_env(const EnvironmentSpec& env, const std::vector<MdpModel>& contexts,
                                      const ChangepointSchedule& schedule, Rng rng) {
  if (env.kind == EnvKind::traffic) {
    return std::make_unique<TrafficEnv>(env.traffic, env.lane_rates, schedule, rng);
  }
  return std::make_unique<NonStationaryEnv>(contexts, schedule, rng);
}

EnvInfo env_info(const EnvironmentSpec& env, const Environment& e) {
  EnvInfo info{e.n_states(), e.n_actions(), e.discount(), env.reward_low, env.reward_high};
  if (env.kind == EnvKind::sensor) {
    info.reward_low = -env.sensor.data_capacity;
    info.reward_high = 0.0;
  } else if (env.kind == EnvKind::traffic) {
    info.reward_low = -TrafficConfig::kLanes * env.traffic.lane_capacity;
    info.reward_high = 0.0;
  }
  return info;
}

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg, const AgentSpec& spec, const EnvInfo& info,
                                            const std::vector<MdpModel>& contexts, std::uint64_t agent_seed,
                                            std::uint64_t detector_seed) {
  const ExperienceDetectorConfig detector = spec.detector.value_or(cfg.detector);
  const auto& pattern = cfg.schedule.contexts;
  auto need_models = [&] {
    if (contexts.empty()) throw UnsupportedOperation(spec.display_name() + " needs known context models");
  };
  switch (spec.kind) {
    case AgentKind::ql:
      return std::make_unique<QLearner>(info, spec.learner, Rng(agent_seed));
    case AgentKind::ruql:
      return std::make_unique<RuqlLearner>(info, spec.learner, Rng(agent_seed));
    case AgentKind::context_ql:
      return std::make_unique<ContextQLearner>(info, spec.learner, pattern, detector, Rng(agent_seed), detector_seed);
    case AgentKind::ucrl2: {
      Ucrl2Config u = spec.ucrl2;
      return std::make_unique<Ucrl2Agent>(info, u, cfg.schedule.horizon);
    }
    case AgentKind::switcher:
      need_models();
      return std::make_unique<ModelBasedSwitcher>(contexts, pattern, spec.epsilon, detector, Rng(agent_seed),
                                                  detector_seed);
    case AgentKind::sr_two_threshold:
      need_models();
      if (pattern.size() < 2) throw ConfigError("sr_two_threshold needs a change in the pattern");
      return std::make_unique<TwoThresholdSwitcher>(contexts.at(pattern[0]), contexts.at(pattern[1]), spec.sr_lower,
                                                    spec.sr_upper);
    case AgentKind::p_cdm:
    case AgentKind::np_cdm:
      break;
  }
  throw ConfigError("agent kind has no controller");
}

RunRecord run_cdm(const ExperimentConfig& cfg, const AgentSpec& spec, const std::vector<MdpModel>& contexts,
                  std::uint64_t seed) {
  if (contexts.empty()) throw UnsupportedOperation(spec.display_name() + " needs known context models");
  std::vector<ChainModel> chains;
  for (const auto& m : contexts) chains.push_back(ChainModel::of(m, value_iteration(m, 1e-8).policy.table));
  const ChangepointSchedule schedule = cfg.schedule.build();
  Rng dyn = Rng::derive(seed, {kDynamics});
  const auto states = simulate_chain_stream(chains, schedule, 0, dyn);
  CdmConfig c = spec.cdm;
  c.randomized = spec.kind == AgentKind::np_cdm;
  Rng agent = Rng::derive(seed, {kAgent});
  RunRecord rec;
  rec.detections = cdm_detect(states, chains, cfg.schedule.contexts, c, agent).detections;
  return rec;
}

}  // namespace

int EnvironmentSpec::context_count() const {
  switch (kind) {
    case EnvKind::random_mdp:
      return n_contexts;
    case EnvKind::sensor:
      return static_cast<int>(energy_rates.size());
    case EnvKind::traffic:
      return static_cast<int>(lane_rates.size());
  }
  return 0;
}

AgentKind parse_agent_kind(const std::string& name) {
  for (std::size_t i = 0; i < std::size(kAgentNames); ++i) {
    if (name == kAgentNames[i]) return static_cast<AgentKind>(i);
  }
  throw ConfigError("unknown agent kind '" + name + "'");
}

std::string to_string(AgentKind kind) { return kAgentNames[static_cast<int>(kind)]; }

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("runs: must be >= 1");
  if (agents.empty()) throw ConfigError("agents: at least one agent is required");
  try {
    (void)schedule.build();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  const int k = environment.context_count();
  for (int c : schedule.contexts) {
    if (c >= k) throw ConfigError("schedule.contexts: label " + std::to_string(c) + " has no environment context");
  }
  if (environment.kind == EnvKind::random_mdp && (environment.n_states < 2 || environment.n_actions < 2)) {
    throw ConfigError("environment: n_states and n_actions must be >= 2");
  }
  for (long w : precision_windows) {
    if (w <= 0) throw ConfigError("precision_windows: entries must be positive");
  }
  try {
    detector.validate();
    for (const auto& a : agents) {
      if (a.detector) a.detector->validate();
    }
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("detector: ") + e.what());
  }
  std::vector<std::string> names;
  for (const auto& a : agents) names.push_back(a.display_name());
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw ConfigError("agents: labels must be unique");
  }
}

std::uint64_t run_seed(std::uint64_t master, int run) {
  return mix64(master ^ mix64(static_cast<std::uint64_t>(run) + 0x5851f42d4c957f2dULL));
}

RunRecord run_single(const ExperimentConfig& cfg, const AgentSpec& spec, int run, std::uint64_t master_seed) {
  const std::uint64_t seed = run_seed(master_seed, run);
  const std::vector<MdpModel> contexts = build_contexts(cfg.environment, seed);
  const ChangepointSchedule schedule = cfg.schedule.build();
  const std::size_t agent_index =
      static_cast<std::size_t>(std::find_if(cfg.agents.begin(), cfg.agents.end(),
                                            [&](const AgentSpec& a) { return &a == &spec; }) -
                               cfg.agents.begin());

  RunRecord rec;
  if (spec.kind == AgentKind::p_cdm || spec.kind == AgentKind::np_cdm) {
    rec = run_cdm(cfg, spec, contexts, seed);
  } else {
    auto env = make_env(cfg.environment, contexts, schedule, Rng::derive(seed, {kDynamics}));
    const EnvInfo info = env_info(cfg.environment, *env);
    auto agent = make_controller(cfg, spec, info, contexts, mix64(seed ^ (kAgent << 32 | agent_index)),
                                 mix64(seed ^ (kDetector << 32 | agent_index)));
    std::vector<ExperienceTuple> trajectory;
    trajectory.reserve(schedule.horizon());
    double discount_weight = 1.0;
    while (true) {
      const int a = agent->act(env->state());
      const auto tuple = env->step(a);
      if (!tuple) break;
      agent->observe(*tuple, a);
      trajectory.push_back(*tuple);
      rec.reward += tuple->reward;
      rec.discounted_reward += discount_weight * tuple->reward;
      discount_weight *= info.discount;
    }
    const AgentReport report = agent->report();
    for (const auto& d : report.detections) rec.detections.push_back(d.location);
    rec.q_tables = report.q_tables;
    if (cfg.compute_regret) rec.regret = regret(trajectory, contexts, schedule, cfg.regret, agent->played_policies());

    if (cfg.evaluate) {
      auto eval_env = make_env(cfg.environment, contexts, schedule, Rng::derive(seed, {kEvalDynamics}));
      agent->begin_evaluation(mix64(seed ^ (kEvalDetector << 32 | agent_index)));
      double total = 0.0;
      while (true) {
        const int a = agent->act(eval_env->state());
        const auto tuple = eval_env->step(a);
        if (!tuple) break;
        agent->observe(*tuple, a);
        total += tuple->reward;
      }
      rec.eval_reward = total;
    }
  }
  rec.agent = spec.display_name();
  rec.run = run;
  rec.seed = seed;
  for (long w : cfg.precision_windows) rec.precision.push_back(precision_recall(rec.detections, schedule.changepoints(), w));
  return rec;
}

AgentAggregate aggregate_records(const std::string& agent, const std::vector<const RunRecord*>& records,
                                 std::size_t n_windows) {
  AgentAggregate out;
  out.agent = agent;
  std::vector<double> reward, discounted, tau, reg, eval;
  std::vector<std::vector<PrecisionRecall>> pr(n_windows);
  for (const RunRecord* r : records) {
    reward.push_back(r->reward);
    discounted.push_back(r->discounted_reward);
    if (auto t = r->tau_star()) {
      tau.push_back(static_cast<double>(*t));
      ++out.runs_with_detection;
    }
    if (r->regret) reg.push_back(*r->regret);
    if (r->eval_reward) eval.push_back(*r->eval_reward);
    for (std::size_t w = 0; w < n_windows && w < r->precision.size(); ++w) pr[w].push_back(r->precision[w]);
  }
  out.reward = detection_stats(reward);
  out.discounted_reward = detection_stats(discounted);
  if (!tau.empty()) out.tau_star = detection_stats(tau);
  if (!reg.empty()) out.regret = detection_stats(reg);
  if (!eval.empty()) out.eval_reward = detection_stats(eval);
  for (const auto& p : pr) out.precision.push_back(pool(p));
  return out;
}

const AgentAggregate& MetricsReport::aggregate(const std::string& agent) const {
  for (const auto& a : aggregates) {
    if (a.agent == agent) return a;
  }
  throw ValidationError("report has no agent '" + agent + "'");
}

std::vector<const RunRecord*> MetricsReport::records_of(const std::string& agent) const {
  std::vector<const RunRecord*> out;
  for (const auto& r : records) {
    if (r.agent == agent) out.push_back(&r);
  }
  return out;
}

MetricsReport run_experiment(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  cfg.validate();
  const std::size_t n_agents = cfg.agents.size();
  const std::size_t jobs = n_agents * static_cast<std::size_t>(cfg.runs);
  std::vector<RunRecord> records(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        records[j] = run_single(cfg, cfg.agents[j / cfg.runs], static_cast<int>(j % cfg.runs), master_seed);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(jobs, cfg.threads > 0 ? cfg.threads : hw);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MetricsReport report;
  report.name = cfg.name;
  report.seed = master_seed;
  report.runs = cfg.runs;
  report.precision_windows = cfg.precision_windows;
  report.records = std::move(records);
  for (const auto& a : cfg.agents) {
    report.aggregates.push_back(
        aggregate_records(a.display_name(), report.records_of(a.display_name()), cfg.precision_windows.size()));
  }
  return report;
}

}  // namespace nsrl
