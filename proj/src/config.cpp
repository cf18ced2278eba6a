#include "nsrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nsrl/error.hpp"

namespace nsrl {

namespace {

using nlohmann::json;

/// A JSON object whose keys must all be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + ": expected an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError(child(key) + ": unknown key");
    }
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(child(key) + ": wrong type");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void read_policy(const json& j, const std::string& path, PolicySpec& out) {
  Fields f(j, path);
  std::string kind = "epsilon_greedy";
  f.read("kind", kind);
  double epsilon = out.epsilon;
  double c = out.ucb_constant;
  f.read("epsilon", epsilon);
  f.read("ucb_constant", c);
  if (kind == "epsilon_greedy") {
    out = PolicySpec::epsilon_greedy(epsilon);
  } else if (kind == "ucb") {
    out = PolicySpec::ucb(c);
  } else {
    throw ConfigError(f.child("kind") + ": expected epsilon_greedy or ucb, got '" + kind + "'");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError(f.child("epsilon") + ": must lie in [0, 1]");
}

void read_learner(const json& j, const std::string& path, LearnerConfig& out) {
  Fields f(j, path);
  if (f.has("exploration")) read_policy(f.at("exploration"), f.child("exploration"), out.exploration);
  if (f.has("step")) {
    Fields s(f.at("step"), f.child("step"));
    s.read("constant", out.step.constant);
    s.read("decay_exponent", out.step.decay_exponent);
    if (!(out.step.constant > 0.0 && out.step.constant <= 1.0)) {
      throw ConfigError(s.child("constant") + ": must lie in (0, 1]");
    }
    if (out.step.decay_exponent < 0.0) throw ConfigError(s.child("decay_exponent") + ": must be >= 0");
  }
  f.read("initial_q", out.initial_q);
}

void read_detector(const json& j, const std::string& path, ExperienceDetectorConfig& out) {
  Fields f(j, path);
  if (f.has("method")) {
    std::string m;
    f.read("method", m);
    try {
      out.method = parse_detector_method(m);
    } catch (const ConfigError& e) {
      throw ConfigError(f.child("method") + ": " + e.what());
    }
  }
  f.read("permutations", out.detector.n_permutations);
  f.read("significance", out.detector.significance);
  f.read("min_segment", out.detector.min_segment);
  f.read("scale_permutations", out.detector.scale_permutations);
  f.read("early_stop", out.detector.early_stop);
  f.read("max_changepoints", out.detector.max_changepoints);
  f.read("window", out.detector.encoding.window);
  f.read("stride", out.detector.encoding.stride);
  f.read("smoothing", out.detector.encoding.smoothing);
  f.read("max_categories", out.max_categories);
  f.read("max_reward_bins", out.max_reward_bins);
  f.read("reward_tolerance", out.reward_tolerance);
  f.read("check_every", out.check_every);
  f.read("refine", out.refine);
  f.read("max_lag", out.max_lag);
  f.read("history", out.history);
  try {
    out.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(f.where() + ": " + e.what());
  }
}

EnvKind parse_env_kind(const std::string& s, const std::string& path) {
  if (s == "random_mdp") return EnvKind::random_mdp;
  if (s == "sensor") return EnvKind::sensor;
  if (s == "traffic") return EnvKind::traffic;
  throw ConfigError(path + ": expected random_mdp, sensor or traffic, got '" + s + "'");
}

void read_environment(const json& j, const std::string& path, EnvironmentSpec& out) {
  Fields f(j, path);
  std::string kind = "random_mdp";
  f.read("kind", kind);
  out.kind = parse_env_kind(kind, f.child("kind"));
  f.read("n_states", out.n_states);
  f.read("n_actions", out.n_actions);
  f.read("n_contexts", out.n_contexts);
  f.read("reward_low", out.reward_low);
  f.read("reward_high", out.reward_high);
  f.read("discount", out.discount);
  if (!(out.discount >= 0.0 && out.discount < 1.0)) throw ConfigError(f.child("discount") + ": must lie in [0, 1)");
  if (!(out.reward_low <= out.reward_high)) throw ConfigError(f.child("reward_high") + ": must be >= reward_low");
  if (f.has("sensor")) {
    Fields s(f.at("sensor"), f.child("sensor"));
    SensorConfig& c = out.sensor;
    s.read("energy_capacity", c.energy_capacity);
    s.read("data_capacity", c.data_capacity);
    s.read("lambda_data", c.lambda_data);
    s.read("max_transmit", c.max_transmit);
    s.read("throughput_scale", c.throughput_scale);
    s.read("discount", c.discount);
  }
  f.read("energy_rates", out.energy_rates);
  if (f.has("traffic")) {
    Fields t(f.at("traffic"), f.child("traffic"));
    TrafficConfig& c = out.traffic;
    t.read("lane_capacity", c.lane_capacity);
    t.read("green_durations", c.green_durations);
    t.read("service_rate", c.service_rate);
    t.read("discount", c.discount);
    try {
      c.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(t.where() + ": " + e.what());
    }
  }
  f.read("lane_rates", out.lane_rates);
}

void read_agent(const json& j, const std::string& path, const ExperienceDetectorConfig& base, AgentSpec& out) {
  Fields f(j, path);
  if (!f.has("kind")) throw ConfigError(f.child("kind") + ": required");
  std::string kind;
  f.read("kind", kind);
  try {
    out.kind = parse_agent_kind(kind);
  } catch (const ConfigError& e) {
    throw ConfigError(f.child("kind") + ": " + e.what());
  }
  f.read("label", out.label);
  if (f.has("learner")) read_learner(f.at("learner"), f.child("learner"), out.learner);
  f.read("epsilon", out.epsilon);
  if (f.has("detector")) {
    out.detector = base;
    read_detector(f.at("detector"), f.child("detector"), *out.detector);
  }
  if (f.has("ucrl2")) {
    Fields u(f.at("ucrl2"), f.child("ucrl2"));
    u.read("delta", out.ucrl2.delta);
    u.read("known_changes", out.ucrl2.known_changes);
    u.read("restart_epochs", out.ucrl2.restart_epochs);
    u.read("evi_max_iterations", out.ucrl2.evi_max_iterations);
  }
  f.read("sr_lower", out.sr_lower);
  f.read("sr_upper", out.sr_upper);
  if (f.has("cdm")) {
    Fields c(f.at("cdm"), f.child("cdm"));
    c.read("threshold", out.cdm.threshold);
    c.read("block_length", out.cdm.block_length);
    c.read("max_gap", out.cdm.max_gap);
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  {
    Fields f(j, "");
    f.read("name", cfg.name);
    if (f.has("environment")) read_environment(f.at("environment"), "environment", cfg.environment);
    if (f.has("schedule")) {
      Fields s(f.at("schedule"), "schedule");
      s.read("changepoints", cfg.schedule.changepoints);
      s.read("contexts", cfg.schedule.contexts);
      s.read("horizon", cfg.schedule.horizon);
    }
    if (f.has("detector")) read_detector(f.at("detector"), "detector", cfg.detector);
    if (f.has("agents")) {
      const json& a = f.at("agents");
      if (!a.is_array()) throw ConfigError("agents: expected an array");
      for (std::size_t i = 0; i < a.size(); ++i) {
        AgentSpec spec;
        read_agent(a[i], indexed("agents", i), cfg.detector, spec);
        cfg.agents.push_back(std::move(spec));
      }
    }
    f.read("runs", cfg.runs);
    f.read("seed", cfg.seed);
    f.read("evaluate", cfg.evaluate);
    f.read("precision_windows", cfg.precision_windows);
    f.read("compute_regret", cfg.compute_regret);
    if (f.has("regret")) {
      Fields r(f.at("regret"), "regret");
      r.read("discount", cfg.regret.discount);
      r.read("global_clock", cfg.regret.global_clock);
      r.read("oracle_epsilon", cfg.regret.oracle_epsilon);
    }
    f.read("threads", cfg.threads);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace nsrl
