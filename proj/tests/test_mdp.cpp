#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "nsrl/envs.hpp"
#include "nsrl/error.hpp"
#include "nsrl/mdp.hpp"

using namespace nsrl;

namespace {

MdpModel two_by_two(double gamma) {
  // [s][a][s']
  std::vector<double> p{0.9, 0.1, 0.2, 0.8,
                        0.3, 0.7, 0.6, 0.4};
  std::vector<double> r{1.0, 0.0,
                        0.5, 2.0};
  return MdpModel(2, 2, p, r, gamma);
}

// Independent oracle: V = (I - gamma P^pi)^{-1} R^pi by a dense LU solve.
Eigen::VectorXd solve_policy(const MdpModel& m, const std::vector<int>& pi) {
  const int n = m.n_states();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (int s = 0; s < n; ++s) {
    for (int k = 0; k < n; ++k) a(s, k) -= m.discount() * m.prob(s, pi[s], k);
    b(s) = m.reward(s, pi[s]);
  }
  return a.partialPivLu().solve(b);
}

}  // namespace

TEST_CASE("single self-loop state sums the geometric series") {
  MdpModel m(1, 1, {1.0}, {1.0}, 0.9);
  const auto vi = value_iteration(m, 1e-8);
  CHECK(vi.values[0] == doctest::Approx(10.0).epsilon(1e-7));

  MdpModel half(1, 1, {1.0}, {2.0}, 0.5);
  CHECK(policy_evaluation(half, PolicySpec::deterministic({0}))[0] == doctest::Approx(4.0));
}

TEST_CASE("zero rewards give zero values") {
  Rng rng(3);
  MdpModel rand = generate_random_mdp(4, 3, 0.9, rng);
  MdpModel zero(4, 3, rand.transition_data(), std::vector<double>(12, 0.0), 0.9);
  for (double v : value_iteration(zero, 1e-8).values) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("myopic evaluation returns the immediate reward") {
  Rng rng(5);
  MdpModel base = generate_random_mdp(5, 3, 0.9, rng);
  MdpModel myopic(5, 3, base.transition_data(), base.reward_data(), 0.0);
  const std::vector<int> pi{0, 2, 1, 1, 0};
  const auto v = policy_evaluation(myopic, PolicySpec::deterministic(pi));
  for (int s = 0; s < 5; ++s) CHECK(v[s] == doctest::Approx(myopic.reward(s, pi[s])));
}

TEST_CASE("value iteration matches brute-force policy enumeration") {
  const MdpModel m = two_by_two(0.9);
  Eigen::VectorXd best = Eigen::VectorXd::Constant(2, -1e9);
  for (int a0 = 0; a0 < 2; ++a0) {
    for (int a1 = 0; a1 < 2; ++a1) best = best.cwiseMax(solve_policy(m, {a0, a1}));
  }
  const auto vi = value_iteration(m, 1e-9);
  for (int s = 0; s < 2; ++s) CHECK(vi.values[s] == doctest::Approx(best(s)).epsilon(1e-7));
  const Eigen::VectorXd greedy = solve_policy(m, vi.policy.table);
  for (int s = 0; s < 2; ++s) CHECK(greedy(s) == doctest::Approx(best(s)).epsilon(1e-7));
}

TEST_CASE("value iteration output is a tolerance fixed point") {
  Rng rng(11);
  const MdpModel m = generate_random_mdp(6, 4, 0.9, rng);
  const double tol = 1e-4;
  const auto vi = value_iteration(m, tol);
  const auto next = bellman_backup(m, vi.values);
  for (int s = 0; s < 6; ++s) CHECK(std::abs(next[s] - vi.values[s]) <= tol);
  const auto v_pi = policy_evaluation(m, vi.policy);
  for (int s = 0; s < 6; ++s) CHECK(std::abs(v_pi[s] - vi.values[s]) <= tol / (1.0 - 0.9));
}

TEST_CASE("policy evaluation agrees with Monte Carlo rollouts") {
  Rng gen(21);
  const MdpModel m = generate_random_mdp(5, 2, 0.9, gen);
  const std::vector<int> pi{1, 0, 0, 1, 1};
  const auto v = policy_evaluation(m, PolicySpec::deterministic(pi));
  const int rollouts = 100000;
  const int horizon = 200;
  Rng rng(22);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < rollouts; ++i) {
    int s = 0;
    double g = 0.0, w = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const auto tr = step(m, s, pi[s], rng);
      g += w * tr.reward;
      w *= 0.9;
      s = tr.next_state;
    }
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / rollouts;
  const double se = std::sqrt((sum2 / rollouts - mean * mean) / rollouts);
  CHECK(std::abs(mean - v[0]) <= 3.0 * se + 1e-6);
}

TEST_CASE("non-stochastic rows are rejected") {
  CHECK_THROWS_AS(MdpModel(1, 1, {0.9}, {0.0}, 0.9), ValidationError);
  CHECK_THROWS_AS(MdpModel(1, 1, {1.0}, {0.0}, 1.0), ValidationError);
  CHECK_THROWS_AS(MdpModel(2, 1, {1.2, -0.2, 0.5, 0.5}, {0.0, 0.0}, 0.5), ValidationError);
}

TEST_CASE("epsilon-greedy with zero epsilon is the argmax") {
  QTable q(1, 3);
  q(0, 0) = 1.0;
  q(0, 1) = 3.0;
  q(0, 2) = 2.0;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) CHECK(select_action(PolicySpec::epsilon_greedy(0.0), 0, 3, &q, nullptr, rng) == 1);
}

TEST_CASE("ties break toward the lowest action") {
  QTable q(1, 4, 2.5);
  CHECK(q.greedy(0) == 0);
  q(0, 3) = 3.0;
  q(0, 1) = 3.0;
  CHECK(q.greedy(0) == 1);
}

TEST_CASE("full perturbation is uniform over the other actions") {
  Rng rng(9);
  std::array<int, 4> freq{};
  const int draws = 100000;
  const auto pol = PolicySpec::epsilon_perturbed({0}, 1.0);
  for (int i = 0; i < draws; ++i) ++freq[select_action(pol, 0, 4, nullptr, nullptr, rng)];
  CHECK(freq[0] == 0);
  for (int a = 1; a < 4; ++a) CHECK(std::abs(freq[a] / double(draws) - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("perturbed frequencies pass a chi-square goodness of fit") {
  Rng rng(10);
  const int n_actions = 5;
  const double eps = 0.3;
  const auto pol = PolicySpec::epsilon_perturbed({2}, eps);
  std::array<double, 5> freq{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++freq[select_action(pol, 0, n_actions, nullptr, nullptr, rng)];
  double chi2 = 0.0;
  for (int a = 0; a < n_actions; ++a) {
    const double expected = draws * (a == 2 ? 1.0 - eps : eps / (n_actions - 1));
    chi2 += (freq[a] - expected) * (freq[a] - expected) / expected;
    CHECK(action_probability(pol, 0, a, n_actions) == doctest::Approx(expected / draws));
  }
  CHECK(chi2 < 13.277);  // chi-square(4) upper 1% point
}

TEST_CASE("ucb with zero bonus is greedy once every action is tried") {
  QTable q(1, 3);
  q(0, 0) = 0.2;
  q(0, 1) = 0.1;
  q(0, 2) = 0.7;
  VisitCounts counts(1, 3);
  Rng rng(2);
  const auto pol = PolicySpec::ucb(0.0);
  // Untried actions come first, lowest index first.
  for (int a = 0; a < 3; ++a) {
    CHECK(select_action(pol, 0, 3, &q, &counts, rng) == a);
    counts.record(0, a);
  }
  CHECK(select_action(pol, 0, 3, &q, &counts, rng) == 2);
}

TEST_CASE("selection is deterministic under a fixed seed") {
  QTable q(3, 4);
  q(1, 2) = 1.0;
  const auto pol = PolicySpec::epsilon_greedy(0.5);
  Rng a(44), b(44);
  for (int i = 0; i < 200; ++i) {
    CHECK(select_action(pol, i % 3, 4, &q, nullptr, a) == select_action(pol, i % 3, 4, &q, nullptr, b));
  }
}

TEST_CASE("step follows a point mass and returns the stored reward") {
  MdpModel m(3, 1, {0, 0, 1, 1, 0, 0, 0, 1, 0}, {0.25, -1.5, 7.0}, 0.9);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto t = step(m, 0, 0, rng);
    CHECK(t.next_state == 2);
    CHECK(t.reward == 0.25);
  }
  CHECK(step(m, 1, 0, rng).reward == -1.5);
}

TEST_CASE("step frequencies match the stored row") {
  Rng gen(31);
  const MdpModel m = generate_random_mdp(6, 2, 0.9, gen);
  Rng rng(32);
  std::vector<double> freq(6, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++freq[step(m, 3, 1, rng).next_state];
  double tv = 0.0;
  for (int k = 0; k < 6; ++k) tv += std::abs(freq[k] / draws - m.prob(3, 1, k));
  CHECK(0.5 * tv <= 0.01);
}

TEST_CASE("discounted return") {
  const std::vector<double> ones{1, 1, 1};
  CHECK(discounted_return(ones, 0.5) == doctest::Approx(1.75));
  CHECK(discounted_return({}, 0.5) == 0.0);

  Rng rng(8);
  std::vector<double> r(1000);
  for (double& x : r) x = rng.uniform() * 4.0 - 2.0;
  double horner = 0.0;
  for (auto it = r.rbegin(); it != r.rend(); ++it) horner = *it + 0.97 * horner;
  CHECK(discounted_return(r, 0.97) == doctest::Approx(horner).epsilon(1e-12));
}

TEST_CASE("finite-horizon value converges to the discounted value") {
  Rng gen(12);
  const MdpModel m = generate_random_mdp(4, 3, 0.8, gen);
  const auto pol = StochasticPolicy::from_deterministic({0, 1, 2, 0}, 3);
  const auto fh = finite_horizon_value(m, pol, 400, 0.8);
  const auto v = policy_evaluation(m, pol);
  for (int s = 0; s < 4; ++s) CHECK(fh[s] == doctest::Approx(v[s]).epsilon(1e-9));
  // One step: the immediate reward alone.
  const auto one = finite_horizon_value(m, pol, 1, 0.8);
  CHECK(one[1] == doctest::Approx(m.reward(1, 1)));
}

TEST_CASE("stationary distribution is invariant under the induced chain") {
  Rng gen(13);
  const MdpModel m = generate_random_mdp(5, 2, 0.9, gen);
  const auto pol = action_distribution(PolicySpec::epsilon_perturbed({0, 1, 1, 0, 1}, 0.2), 5, 2);
  const auto pi = stationary_distribution(m, pol);
  const auto p = induced_chain(m, pol);
  CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0));
  for (int k = 0; k < 5; ++k) {
    double next = 0.0;
    for (int s = 0; s < 5; ++s) next += pi[s] * p[s * 5 + k];
    CHECK(next == doctest::Approx(pi[k]).epsilon(1e-9));
  }
}

TEST_CASE("trajectory buffer enforces consecutive epochs") {
  TrajectoryBuffer buf;
  buf.push({0, 1.0, 1, 10}, 0);
  buf.push({1, 2.0, 0, 11}, 1);
  CHECK_THROWS_AS(buf.push({0, 0.0, 0, 13}, 0), ValidationError);
  CHECK(buf.size() == 2);
  CHECK(buf.since(11).size() == 1);
  CHECK(buf.rewards() == std::vector<double>{1.0, 2.0});
}
