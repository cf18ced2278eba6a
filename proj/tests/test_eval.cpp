#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nsrl/config.hpp"
#include "nsrl/error.hpp"
#include "nsrl/experiment.hpp"
#include "nsrl/metrics.hpp"
#include "nsrl/report.hpp"

using namespace nsrl;

namespace {

// Two states with uniform moves; context c pays 1 for action c and 0 otherwise.
MdpModel paying(int good_action, double gamma) {
  std::vector<double> p(2 * 2 * 2, 0.5);
  std::vector<double> r(4, 0.0);
  for (int s = 0; s < 2; ++s) r[s * 2 + good_action] = 1.0;
  return MdpModel(2, 2, p, r, gamma);
}

std::vector<ExperienceTuple> play(const std::vector<MdpModel>& ctx, const ChangepointSchedule& sched,
                                  const std::vector<PlayedPolicy>& played, std::uint64_t seed) {
  NonStationaryEnv env(ctx, sched, Rng(seed));
  std::vector<ExperienceTuple> out;
  std::size_t k = 0;
  while (env.clock() < sched.horizon()) {
    while (k + 1 < played.size() && env.clock() >= played[k + 1].from) ++k;
    out.push_back(*env.step(played[k].policy.table[env.state()]));
  }
  return out;
}

const char* kMinimalConfig = R"({
  "name": "mini",
  "environment": {"kind": "random_mdp", "n_states": 3, "n_actions": 2},
  "schedule": {"changepoints": [150], "contexts": [0, 1], "horizon": 300},
  "detector": {"window": 25, "stride": 25},
  "agents": [{"kind": "ql"}, {"kind": "context_ql"}, {"kind": "switcher", "label": "sw"}],
  "runs": 3,
  "seed": 9
})";

}  // namespace

TEST_CASE("summary statistics") {
  const std::vector<double> flat{1000, 1000, 1000};
  const auto a = detection_stats(flat);
  CHECK(a.mean == 1000.0);
  CHECK(a.sd == 0.0);
  CHECK(a.median == 1000.0);
  const std::vector<double> two{990, 1010};
  const auto b = detection_stats(two);
  CHECK(b.mean == doctest::Approx(1000.0));
  CHECK(b.sd == doctest::Approx(14.1421356));
  CHECK(b.median == doctest::Approx(1000.0));
  const std::vector<double> one{7.0};
  CHECK(detection_stats(one).sd == 0.0);
  CHECK_THROWS_AS(detection_stats({}), ValidationError);
}

TEST_CASE("precision and recall under greedy matching") {
  const std::vector<long> truth{1000};
  const std::vector<long> hit{1005};
  auto pr = precision_recall(hit, truth, 100);
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == 1.0);
  const std::vector<long> spurious{1005, 1500};
  pr = precision_recall(spurious, truth, 100);
  CHECK(pr.precision == 0.5);
  CHECK(pr.recall == 1.0);
  const std::vector<long> far{1200};
  CHECK(precision_recall(far, truth, 100).precision == 0.0);
  CHECK(precision_recall({}, {}, 100).precision == 1.0);
  CHECK(precision_recall({}, truth, 100).recall == 0.0);
  // Two detections near one truth: only one counts.
  const std::vector<long> doubled{990, 1010};
  pr = precision_recall(doubled, truth, 100);
  CHECK(pr.true_positives == 1);
  // The nearest pair is matched first.
  const std::vector<long> truths{100, 180};
  const std::vector<long> dets{150, 175};
  pr = precision_recall(dets, truths, 60);
  CHECK(pr.true_positives == 2);
}

TEST_CASE("precision and recall are shift invariant and pool by counts") {
  Rng rng(3);
  std::vector<long> det, truth;
  for (int i = 0; i < 20; ++i) det.push_back(static_cast<long>(rng.below(5000)));
  for (int i = 0; i < 8; ++i) truth.push_back(static_cast<long>(rng.below(5000)));
  auto shifted_det = det, shifted_truth = truth;
  for (auto& x : shifted_det) x += 777;
  for (auto& x : shifted_truth) x += 777;
  const auto a = precision_recall(det, truth, 150);
  const auto b = precision_recall(shifted_det, shifted_truth, 150);
  CHECK(a.true_positives == b.true_positives);
  CHECK(a.precision == b.precision);

  const std::vector<PrecisionRecall> runs{{1.0, 1.0, 1, 1, 1}, {0.5, 1.0, 1, 2, 1}, {1.0, 0.0, 0, 0, 1}};
  const auto p = pool(runs);
  CHECK(p.precision == doctest::Approx(2.0 / 3.0));
  CHECK(p.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("perfect switching has zero regret") {
  const std::vector<MdpModel> ctx{paying(0, 0.9), paying(1, 0.9)};
  const ChangepointSchedule sched({100}, {0, 1}, 200);
  const std::vector<PlayedPolicy> played{{0, PolicySpec::deterministic({0, 0})},
                                         {100, PolicySpec::deterministic({1, 1})}};
  const auto traj = play(ctx, sched, played, 4);
  for (bool global : {false, true}) {
    RegretOptions opt{0.9, global, 0.0};
    CHECK(regret(traj, ctx, sched, opt, played) == doctest::Approx(0.0).scale(1.0));
    CHECK(regret(traj, ctx, sched, opt) == doctest::Approx(0.0).scale(1.0));
  }
  CHECK_THROWS_AS(regret(traj, {}, sched, RegretOptions{}), UnsupportedOperation);
}

TEST_CASE("a delayed switch costs the closed-form gap") {
  const std::vector<MdpModel> ctx{paying(0, 0.9), paying(1, 0.9)};
  const ChangepointSchedule sched({100}, {0, 1}, 200);
  for (long d : {1L, 7L, 40L}) {
    const std::vector<PlayedPolicy> played{{0, PolicySpec::deterministic({0, 0})},
                                           {100 + d, PolicySpec::deterministic({1, 1})}};
    const auto traj = play(ctx, sched, played, 5);
    CHECK(regret(traj, ctx, sched, RegretOptions{1.0, false, 0.0}, played) == doctest::Approx(double(d)));
    const double g = 0.8;
    const double gap = (1.0 - std::pow(g, double(d))) / (1.0 - g);
    CHECK(regret(traj, ctx, sched, RegretOptions{g, false, 0.0}, played) == doctest::Approx(gap));
    CHECK(regret(traj, ctx, sched, RegretOptions{g, true, 0.0}, played) ==
          doctest::Approx(std::pow(g, 100.0) * gap));
  }
}

TEST_CASE("regret against exact oracles is non-negative") {
  Rng gen(6);
  const std::vector<MdpModel> ctx{generate_random_mdp(4, 3, 0.9, gen), generate_random_mdp(4, 3, 0.9, gen)};
  const ChangepointSchedule sched({300}, {0, 1}, 600);
  Rng pick(7);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> a(4), b(4);
    for (int s = 0; s < 4; ++s) {
      a[s] = static_cast<int>(pick.below(3));
      b[s] = static_cast<int>(pick.below(3));
    }
    const std::vector<PlayedPolicy> played{{0, PolicySpec::deterministic(a)},
                                           {static_cast<long>(pick.below(600)), PolicySpec::deterministic(b)}};
    const auto traj = play(ctx, sched, played, 8 + trial);
    CHECK(regret(traj, ctx, sched, RegretOptions{1.0, false, 0.0}, played) >= -1e-6);
  }
}

TEST_CASE("config errors name the offending field") {
  CHECK_NOTHROW(parse_experiment_config(kMinimalConfig));
  std::string bad = kMinimalConfig;
  bad.replace(bad.find("\"runs\""), 6, "\"rnus\"");
  try {
    parse_experiment_config(bad);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("rnus") != std::string::npos);
  }
  std::string typed = kMinimalConfig;
  typed.replace(typed.find("\"horizon\": 300"), 14, "\"horizon\": \"x\"");
  try {
    parse_experiment_config(typed);
    FAIL("ill-typed value accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("horizon") != std::string::npos);
  }
  std::string agent = kMinimalConfig;
  agent.replace(agent.find("\"kind\": \"ql\""), 12, "\"kind\": \"qq\"");
  CHECK_THROWS_AS(parse_experiment_config(agent), ConfigError);
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/exp.json"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);
}

TEST_CASE("reports are a pure function of the seed") {
  ExperimentConfig cfg = parse_experiment_config(kMinimalConfig);
  cfg.threads = 1;
  const auto a = run_experiment(cfg, cfg.seed);
  cfg.threads = 3;
  const auto b = run_experiment(cfg, cfg.seed);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_json(a) == report_json(b));
  const auto c = run_experiment(cfg, cfg.seed + 1);
  CHECK(report_csv(a) != report_csv(c));

  const std::string csv = report_csv(a);
  CHECK(csv.rfind("agent,run,seed,tau_star,reward,discounted_reward,regret,eval_reward,detections\n", 0) == 0);
  CHECK(a.records.size() == 9);
  CHECK(a.records_of("sw").size() == 3);
  CHECK(a.aggregate("context_ql").reward.count == 3);
}

TEST_CASE("all agents of a run face the same contexts") {
  ExperimentConfig cfg = parse_experiment_config(kMinimalConfig);
  cfg.runs = 1;
  const auto report = run_experiment(cfg, cfg.seed);
  CHECK(report.records[0].seed == report.records[1].seed);
  CHECK(report.records[1].seed == report.records[2].seed);
  CHECK(report.records[0].seed == run_seed(cfg.seed, 0));
}

TEST_CASE("a single run aggregates to itself") {
  ExperimentConfig cfg = parse_experiment_config(kMinimalConfig);
  cfg.runs = 1;
  const auto report = run_experiment(cfg, cfg.seed);
  for (const auto& rec : report.records) {
    const auto& agg = report.aggregate(rec.agent);
    CHECK(agg.reward.mean == rec.reward);
    CHECK(agg.reward.median == rec.reward);
    CHECK(agg.reward.sd == 0.0);
    CHECK(agg.discounted_reward.mean == rec.discounted_reward);
  }
}

TEST_CASE("aggregates do not depend on run order") {
  ExperimentConfig cfg = parse_experiment_config(kMinimalConfig);
  cfg.runs = 4;
  const auto report = run_experiment(cfg, cfg.seed);
  auto recs = report.records_of("ql");
  const auto forward = aggregate_records("ql", recs, 1);
  std::reverse(recs.begin(), recs.end());
  const auto backward = aggregate_records("ql", recs, 1);
  CHECK(forward.reward.mean == doctest::Approx(backward.reward.mean));
  CHECK(forward.reward.sd == doctest::Approx(backward.reward.sd));
  CHECK(forward.reward.median == backward.reward.median);
  CHECK(forward.precision[0].true_positives == backward.precision[0].true_positives);
}

TEST_CASE("regret is recorded for every controller when it is requested") {
  ExperimentConfig cfg = parse_experiment_config(kMinimalConfig);
  cfg.runs = 1;
  cfg.compute_regret = true;
  const auto report = run_experiment(cfg, cfg.seed);
  for (const auto& rec : report.records) CHECK(rec.regret.has_value());
  // The switcher is charged the exact value of its rules.
  CHECK(*report.records_of("sw")[0]->regret >= -1e-6);
  CHECK(report.aggregate("sw").regret.has_value());
}

TEST_CASE("text tables carry one row per agent") {
  ExperimentConfig cfg = parse_experiment_config(kMinimalConfig);
  cfg.runs = 2;
  const auto report = run_experiment(cfg, cfg.seed);
  const std::string t = format_table(report, TableLayout::reward);
  for (const char* name : {"ql", "context_ql", "sw"}) CHECK(t.find(name) != std::string::npos);
}
