#include <doctest.h>

#include <cmath>

#include "nsrl/envs.hpp"
#include "nsrl/error.hpp"
#include "nsrl/quickest.hpp"

using namespace nsrl;

TEST_CASE("unit likelihood ratios make the statistic count steps") {
  SrState st;
  CHECK(st.statistic == 0.0);
  for (int t = 1; t <= 5000; ++t) {
    st = sr_advance(st, 1.0);
    REQUIRE(st.statistic == static_cast<double>(t));
  }
}

TEST_CASE("two-step recursion arithmetic") {
  SrState st;
  st = sr_advance(st, 2.0);
  CHECK(st.statistic == 2.0);
  st = sr_advance(st, 0.5);
  CHECK(st.statistic == 1.5);
  CHECK_THROWS_AS(sr_advance(st, -1.0), ValidationError);
}

TEST_CASE("phase is a threshold function") {
  CHECK(sr_phase(499.9, 500, 1000) == SrPhase::follow_pre);
  CHECK(sr_phase(500, 500, 1000) == SrPhase::follow_kl);
  CHECK(sr_phase(999, 500, 1000) == SrPhase::follow_kl);
  CHECK(sr_phase(1000, 500, 1000) == SrPhase::follow_post);
  for (double x : {0.0, 10.0, 99.99, 100.0, 1e6}) CHECK(sr_phase(x, 100, 100) != SrPhase::follow_kl);
}

TEST_CASE("transition KL matches a direct summation") {
  Rng gen(3);
  const MdpModel p0 = generate_random_mdp(5, 4, 0.9, gen);
  const MdpModel p1 = generate_random_mdp(5, 4, 0.9, gen);
  const double eps = 1e-6;
  for (int s = 0; s < 5; ++s) {
    for (int a = 0; a < 4; ++a) {
      double cross = 0.0, entropy = 0.0;
      for (int k = 0; k < 5; ++k) {
        const double q1 = (p1.prob(s, a, k) + eps) / (1 + 5 * eps);
        const double q0 = (p0.prob(s, a, k) + eps) / (1 + 5 * eps);
        entropy += q1 * std::log(q1);
        cross += q1 * std::log(q0);
      }
      CHECK(transition_kl(p0, p1, s, a) == doctest::Approx(entropy - cross).epsilon(1e-10));
      CHECK(transition_kl(p0, p1, s, a) >= 0.0);
    }
  }
}

TEST_CASE("KL policy picks the most informative action") {
  Rng gen(4);
  const MdpModel p0 = generate_random_mdp(4, 3, 0.9, gen);
  for (int a : kl_policy(p0, p0).table) CHECK(a == 0);

  // Only action 2 of each state changes its row.
  std::vector<double> p = p0.transition_data();
  for (int s = 0; s < 4; ++s) {
    double* row = &p[(s * 3 + 2) * 4];
    std::rotate(row, row + 1, row + 4);
  }
  const MdpModel p1(4, 3, p, p0.reward_data(), 0.9);
  for (int a : kl_policy(p0, p1).table) CHECK(a == 2);
}

TEST_CASE("evidence from the post-change model drives the statistic past the alarm level") {
  Rng gen(5);
  const MdpModel p0 = generate_random_mdp(5, 5, 0.9, gen);
  const MdpModel p1 = generate_random_mdp(5, 5, 0.9, gen);
  const auto pi = kl_policy(p0, p1).table;
  // Exact one-step multiplier under P1: sum P1^2 / P0 >= 1 per row.
  for (int s = 0; s < 5; ++s) {
    double expected = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double q1 = smoothed_probability(p1.row(s, pi[s]), k);
      expected += q1 * q1 / smoothed_probability(p0.row(s, pi[s]), k);
    }
    CHECK(expected > 1.0);
  }
  int crossed = 0;
  for (int run = 0; run < 20; ++run) {
    Rng rng(100 + run);
    SrState st;
    int s = 0;
    for (int t = 0; t < 2000 && st.statistic < 1000.0; ++t) {
      const auto tr = step(p1, s, pi[s], rng);
      st = sr_update(st, {s, tr.reward, tr.next_state, t}, pi[s], p0, p1);
      s = tr.next_state;
    }
    crossed += st.statistic >= 1000.0;
  }
  CHECK(crossed >= 19);
}

TEST_CASE("two-threshold switcher ends on the post-change policy") {
  Rng gen(6);
  const MdpModel p0 = generate_random_mdp(5, 5, 0.9, gen);
  const MdpModel p1 = generate_random_mdp(5, 5, 0.9, gen);
  TwoThresholdSwitcher sw(p0, p1, 500.0, 1000.0);
  NonStationaryEnv env({p0, p1}, ChangepointSchedule({500}, {0, 1}, 1500), Rng(7));
  while (true) {
    const int a = sw.act(env.state());
    const auto t = env.step(a);
    if (!t) break;
    sw.observe(*t, a);
  }
  CHECK(sw.sr().phase == SrPhase::follow_post);
  const auto rep = sw.report();
  REQUIRE(rep.detections.size() == 1);
  CHECK(rep.detections[0].statistic >= 1000.0);
  const auto post = value_iteration(p1, 1e-8).policy.table;
  for (int s = 0; s < 5; ++s) CHECK(sw.act(s) == post[s]);
  CHECK_THROWS_AS(TwoThresholdSwitcher(p0, p1, 10.0, 5.0), ConfigError);
}

TEST_CASE("sign count climbs to the threshold and never goes negative") {
  CusumState st{0, 5};
  for (int i = 1; i <= 4; ++i) {
    CHECK_FALSE(cusum_advance(st, 0.3));
    CHECK(st.m == i);
  }
  CHECK(cusum_advance(st, 2.0));

  CusumState low{0, 5};
  for (int i = 0; i < 1000; ++i) {
    cusum_advance(low, -1.0);
    REQUIRE(low.m == 0);
  }
  Rng rng(8);
  CusumState mixed{0, 1000000};
  for (int i = 0; i < 100000; ++i) {
    cusum_advance(mixed, rng.uniform() < 0.7 ? -1.0 : 1.0);
    REQUIRE(mixed.m >= 0);
  }
  CusumState flat{3, 10};
  cusum_advance(flat, 0.0);
  CHECK(flat.m == 3);
}

TEST_CASE("block log ratio equals the hand-computed chain probabilities") {
  ChainModel pre{2, {0.9, 0.1, 0.2, 0.8}, {2.0 / 3.0, 1.0 / 3.0}};
  ChainModel post{2, {0.5, 0.5, 0.5, 0.5}, {0.5, 0.5}};
  const std::vector<int> block{0, 0, 1, 1};
  double llr = 0.0;
  REQUIRE(block_log_ratio(block, pre, post, llr));
  const auto sm = [](double p) { return (p + 1e-6) / (1 + 2e-6); };
  const double lp_pre = std::log(sm(2.0 / 3.0)) + std::log(sm(0.9)) + std::log(sm(0.1)) + std::log(sm(0.8));
  const double lp_post = std::log(sm(0.5)) + 3 * std::log(sm(0.5));
  CHECK(llr == doctest::Approx(lp_post - lp_pre));

  ChainModel stuck{2, {1.0, 0.0, 0.0, 1.0}, {0.5, 0.5}};
  const std::vector<int> jump{0, 1};
  CHECK_FALSE(block_log_ratio(jump, stuck, stuck, llr));
}

TEST_CASE("chain model stationary law") {
  Rng gen(9);
  const MdpModel m = generate_random_mdp(4, 2, 0.9, gen);
  const std::vector<int> pi{1, 0, 1, 1};
  const ChainModel c = ChainModel::of(m, pi);
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    double next = 0.0;
    for (int s = 0; s < 4; ++s) next += c.stationary[s] * c.transition[s * 4 + k];
    CHECK(next == doctest::Approx(c.stationary[k]).epsilon(1e-9));
    total += c.stationary[k];
  }
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("sign-count detector finds a switch between distinct chains") {
  ChainModel a{2, {0.95, 0.05, 0.05, 0.95}, {0.5, 0.5}};
  ChainModel b{2, {0.05, 0.95, 0.95, 0.05}, {0.5, 0.5}};
  const ChangepointSchedule sched({600}, {0, 1}, 1200);
  Rng rng(10);
  const auto states = simulate_chain_stream({a, b}, sched, 0, rng);
  CdmConfig cfg;
  cfg.threshold = 10;
  cfg.block_length = 4;
  Rng det_rng(11);
  const auto res = cdm_detect(states, {a, b}, {0, 1}, cfg, det_rng);
  REQUIRE_FALSE(res.detections.empty());
  CHECK(std::abs(res.detections[0] - 600) <= 20);
  CHECK(res.alarms[0] > res.detections[0]);
  CHECK_THROWS_AS(cdm_detect(states, {a, b}, {0}, cfg, det_rng), ConfigError);
}
