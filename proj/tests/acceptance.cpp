// One PASS/FAIL line per acceptance criterion.
// Usage: nsrl_acceptance [--strict] [--out FILE] [criterion ...]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nsrl/agents.hpp"
#include "nsrl/config.hpp"
#include "nsrl/dirichlet.hpp"
#include "nsrl/envs.hpp"
#include "nsrl/experience_detector.hpp"
#include "nsrl/experiment.hpp"
#include "nsrl/quickest.hpp"

using namespace nsrl;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MetricsReport run_preset(const std::string& name) {
  const ExperimentConfig cfg = load_experiment_config(std::string(NSRL_CONFIG_DIR) + "/" + name + ".json");
  return run_experiment(cfg, cfg.seed);
}

double pooled_se(const SummaryStats& a, const SummaryStats& b) {
  return std::sqrt(a.sd * a.sd / a.count + b.sd * b.sd / b.count);
}

Verdict stationary_ql() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng gen(2024);
  const MdpModel m = generate_random_mdp(5, 5, 0.9, gen);
  const QTable q_star = action_values(m, value_iteration(m, 1e-10).values);
  LearnerConfig cfg;
  cfg.exploration = PolicySpec::epsilon_greedy(0.3);
  cfg.step = {0.1, 0.7};
  cfg.initial_q = 5.0;
  QLearner ql({5, 5, 0.9, 0.0, 1.0}, cfg, Rng(7));
  NonStationaryEnv env({m}, ChangepointSchedule::stationary(0, 200000), Rng(8));
  while (true) {
    const int a = ql.act(env.state());
    const auto t = env.step(a);
    if (!t) break;
    ql.observe(*t, a);
  }
  double err = 0.0;
  for (std::size_t i = 0; i < q_star.data().size(); ++i) err = std::max(err, std::abs(q_star.data()[i] - ql.q().data()[i]));
  const double secs = seconds_since(t0);
  const double bound = 0.1 / (1.0 - 0.9);
  return {err <= bound && secs < 30.0, fmt("sup|Q - Q*| = %.4f (bound %.2f), %.1f s", err, bound, secs)};
}

Verdict table1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_preset("table1");
  const auto& o = r.aggregate("odcp");
  const auto& e = r.aggregate("ecp");
  if (!o.tau_star || !e.tau_star) return {false, "a detector never fired"};
  const double secs = seconds_since(t0);
  const bool ok = o.tau_star->mean >= 950 && o.tau_star->mean <= 1050 && o.tau_star->sd <= 60 &&
                  e.tau_star->mean >= 940 && e.tau_star->mean <= 1070 && secs < 600;
  return {ok, fmt("ODCP tau* %.1f sd %.1f (%d/20 runs), ECP tau* %.1f sd %.1f (%d/20), %.0f s", o.tau_star->mean,
                  o.tau_star->sd, o.runs_with_detection, e.tau_star->mean, e.tau_star->sd, e.runs_with_detection, secs)};
}

Verdict tables2_3() {
  ExperimentConfig cfg = load_experiment_config(std::string(NSRL_CONFIG_DIR) + "/table2.json");
  cfg.precision_windows = {100, 50};
  const auto r = run_experiment(cfg, cfg.seed);
  const auto& k5 = r.aggregate("np_cdm_k5").precision;
  const auto& k20 = r.aggregate("np_cdm_k20").precision;
  const auto& cql = r.aggregate("context_ql").precision;
  const bool ok = k20[0].precision - k5[0].precision >= 0.4 && cql[0].precision == 1.0 && cql[0].recall >= 0.7 &&
                  cql[1].precision == cql[0].precision && cql[1].recall == cql[0].recall;
  return {ok, fmt("NP-CDM precision K=5 %.3f, K=20 %.3f; Context QL W=100 (%.3f, %.3f), W=50 (%.3f, %.3f)",
                  k5[0].precision, k20[0].precision, cql[0].precision, cql[0].recall, cql[1].precision, cql[1].recall)};
}

Verdict table4() {
  const auto r = run_preset("table4");
  const auto& sw = r.aggregate("odcp_switcher").reward;
  const auto& cql = r.aggregate("context_ql").reward;
  const auto& ql = r.aggregate("ql").reward;
  const auto& uc = r.aggregate("ucrl2").reward;
  const auto& ru = r.aggregate("ruql").reward;
  const double gap1 = (sw.mean - cql.mean) / pooled_se(sw, cql);
  const double gap2 = (cql.mean - ql.mean) / pooled_se(cql, ql);
  const bool ok = sw.mean > cql.mean && cql.mean > ql.mean && ql.mean > uc.mean && uc.mean > ru.mean && gap1 >= 1.0 &&
                  gap2 >= 1.0;
  return {ok, fmt("switcher %.1f, context QL %.1f, QL %.1f, UCRL2 %.1f, RUQL %.1f; gaps %.2f and %.2f pooled SE",
                  sw.mean, cql.mean, ql.mean, uc.mean, ru.mean, gap1, gap2)};
}

Verdict table5() {
  const auto r = run_preset("table5");
  const auto& o = *r.aggregate("odcp").regret;
  const auto& e = *r.aggregate("ecp").regret;
  return {o.mean < e.mean && o.mean <= 60.0,
          fmt("regret ODCP %.2f +- %.2f, ECP %.2f +- %.2f", o.mean, o.sd, e.mean, e.sd)};
}

Verdict multiple_changes() {
  int odcp_exact = 0, ecp_fewer = 0;
  const long truth[3] = {500, 1000, 1500};
  for (int run = 0; run < 20; ++run) {
    const std::uint64_t seed = 77 + run;
    Rng ctx_rng = Rng::derive(seed, {1});
    std::vector<MdpModel> m{generate_random_mdp(5, 5, 0.9, ctx_rng), generate_random_mdp(5, 5, 0.9, ctx_rng)};
    const auto policy = PolicySpec::epsilon_perturbed(value_iteration(m[0], 1e-8).policy.table, 0.1);
    NonStationaryEnv env(m, ChangepointSchedule({500, 1000, 1500}, {0, 1, 0, 1}, 2000), Rng::derive(seed, {2}));
    Rng act = Rng::derive(seed, {3});
    std::vector<ExperienceTuple> tuples;
    while (auto t = env.step(select_action(policy, env.state(), 5, nullptr, nullptr, act))) tuples.push_back(*t);
    for (auto method : {DetectorMethod::odcp, DetectorMethod::ecp}) {
      ExperienceDetectorConfig c;
      c.method = method;
      Rng det = Rng::derive(seed, {4});
      const auto rep = detect_in_tuples(tuples, 5, c, det, true);
      if (method == DetectorMethod::ecp) {
        ecp_fewer += rep.changepoints.size() < 3;
        continue;
      }
      bool ok = rep.changepoints.size() == 3;
      for (std::size_t i = 0; ok && i < 3; ++i) ok = std::labs(rep.changepoints[i] - truth[i]) <= 100;
      odcp_exact += ok;
    }
  }
  return {odcp_exact >= 15 && ecp_fewer >= 15,
          fmt("ODCP exactly three within 100 in %d/20 runs; ECP fewer than three in %d/20", odcp_exact, ecp_fewer)};
}

Verdict multiple_rewards() {
  const auto r = run_preset("multiple");
  const double cql = r.aggregate("context_ql").eval_reward->mean;
  const double ql = r.aggregate("ql").eval_reward->mean;
  const double uc = r.aggregate("ucrl2").eval_reward->mean;
  const double ru = r.aggregate("ruql").eval_reward->mean;
  return {cql > ql && ql > uc && uc > ru,
          fmt("context QL %.1f, QL %.1f, UCRL2 %.1f, RUQL %.1f", cql, ql, uc, ru)};
}

Verdict sensor() {
  const auto r = run_preset("table6");
  const double cql = -r.aggregate("context_ql").eval_reward->mean;
  const double ql = -r.aggregate("ql").eval_reward->mean;
  const double ru = -r.aggregate("ruql").eval_reward->mean;
  const double gap = (ql - cql) / ql;
  return {cql < ql && ql < ru && gap >= 0.10,
          fmt("cost context QL %.1f, QL %.1f, RUQL %.1f; relative gap %.1f%%", cql, ql, ru, 100 * gap)};
}

Verdict traffic() {
  const auto r = run_preset("table7");
  const double cql = -r.aggregate("context_ql").eval_reward->mean;
  const double ql = -r.aggregate("ql").eval_reward->mean;
  const double gap = (ql - cql) / ql;
  return {cql < ql && gap >= 0.05, fmt("cost context QL %.1f, QL %.1f; relative gap %.1f%%", cql, ql, 100 * gap)};
}

Verdict validity() {
  // (a) false alarms of the single-split test on stationary experience streams.
  ExperienceDetectorConfig cfg;
  Rng gen(31);
  int alarms = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const MdpModel m = generate_random_mdp(5, 5, 0.9, gen);
    const auto policy = PolicySpec::epsilon_perturbed(value_iteration(m, 1e-8).policy.table, 0.1);
    NonStationaryEnv env({m}, ChangepointSchedule::stationary(0, 2000), Rng::derive(31, {1, std::uint64_t(trial)}));
    Rng act = Rng::derive(31, {2, std::uint64_t(trial)});
    std::vector<ExperienceTuple> tuples;
    while (auto t = env.step(select_action(policy, env.state(), 5, nullptr, nullptr, act))) tuples.push_back(*t);
    Rng det = Rng::derive(31, {3, std::uint64_t(trial)});
    alarms += !detect_in_tuples(tuples, 5, cfg, det, false).changepoints.empty();
  }
  const bool a = alarms <= 2 * cfg.detector.significance * 200;

  // (b) identical p-values under a fixed seed.
  Eigen::MatrixXd x(80, 4);
  for (int i = 0; i < 80; ++i) {
    for (int k = 0; k < 4; ++k) x(i, k) = gen.gamma(i < 40 ? 2.0 + k : 5.0 - k);
    x.row(i) /= x.row(i).sum();
  }
  Rng r1(5), r2(5);
  const bool b = odcp_test(x, cfg.detector, r1).p_value == odcp_test(x, cfg.detector, r2).p_value;

  // (c) concentration recovery.
  Eigen::MatrixXd d(10000, 3);
  const double truth[3] = {2.0, 5.0, 3.0};
  for (int i = 0; i < 10000; ++i) {
    for (int k = 0; k < 3; ++k) d(i, k) = gen.gamma(truth[k]);
    d.row(i) /= d.row(i).sum();
  }
  const auto fit = dirichlet_mle(d);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(fit.alpha[k] / truth[k] - 1.0));
  const bool c = worst <= 0.05;

  // (d) unit ratios.
  SrState st;
  bool dd = true;
  for (int t = 1; t <= 100000 && dd; ++t) dd = (st = sr_advance(st, 1.0)).statistic == t;

  // (e) clamp under adversarial signs.
  CusumState cs{0, 1 << 30};
  bool e = true;
  for (int i = 0; i < 100000 && e; ++i) {
    cusum_advance(cs, (i / 7) % 3 == 0 ? 1.0 : -1.0);
    e = cs.m >= 0;
  }
  return {a && b && c && dd && e,
          fmt("(a) %d/200 false alarms at alpha 0.05 %s; (b) %s; (c) worst error %.2f%% %s; (d) %s; (e) %s", alarms,
              a ? "ok" : "FAIL", b ? "ok" : "FAIL", 100 * worst, c ? "ok" : "FAIL", dd ? "ok" : "FAIL",
              e ? "ok" : "FAIL")};
}

Verdict scalability() {
  const ContextQState five(5, 5, {0, 1, 0, 1, 0, 1});
  std::vector<int> many;
  for (int i = 0; i < 501; ++i) many.push_back(i % 2);
  const ContextQState hundreds(5, 5, many);
  const auto bytes = [](const ContextQState& s) {
    std::size_t total = 0;
    for (int i = 0; i < s.table_count(); ++i) total += s.table(i).data().size() * sizeof(double);
    return total;
  };
  return {five.table_count() == 2 && bytes(five) == bytes(hundreds),
          fmt("5 changes: %d tables, %zu bytes; 500 changes: %d tables, %zu bytes", five.table_count(), bytes(five),
              hundreds.table_count(), bytes(hundreds))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Verdict()>>> criteria{
      {1, {"stationary QL convergence", stationary_ql}},
      {2, {"single-change detection delay", table1}},
      {3, {"precision and recall trends", tables2_3}},
      {4, {"single-change reward ordering", table4}},
      {5, {"switcher regret", table5}},
      {6, {"multiple changepoints", multiple_changes}},
      {7, {"multiple-change reward ordering", multiple_rewards}},
      {8, {"sensor cost ordering", sensor}},
      {9, {"traffic cost ordering", traffic}},
      {10, {"detector validity properties", validity}},
      {11, {"Q storage scalability", scalability}},
  };
  bool strict = false;
  std::FILE* copy = nullptr;
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict") {
      strict = true;
    } else if (arg == "--out" && i + 1 < argc) {
      copy = std::fopen(argv[++i], "w");
      if (!copy) {
        std::fprintf(stderr, "cannot write '%s'\n", argv[i]);
        return 2;
      }
    } else {
      selected.push_back(std::atoi(argv[i]));
      if (!criteria.count(selected.back())) {
        std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
        return 2;
      }
    }
  }
  if (selected.empty()) {
    for (const auto& [id, c] : criteria) selected.push_back(id);
  }
  int failed = 0;
  for (int id : selected) {
    const auto& [name, check] = criteria.at(id);
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    const std::string line = fmt("criterion %2d %s  %s: %s [%.0f s]\n", id, v.pass ? "PASS" : "FAIL", name,
                                 v.detail.c_str(), seconds_since(t0));
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (copy) std::fputs(line.c_str(), copy);
  }
  const std::string summary =
      fmt("%d of %zu criteria passed\n", static_cast<int>(selected.size()) - failed, selected.size());
  std::fputs(summary.c_str(), stdout);
  if (copy) {
    std::fputs(summary.c_str(), copy);
    std::fclose(copy);
  }
  return strict && failed > 0 ? 1 : 0;
}
