#include <algorithm>
#include <functional>
#include <limits>

#include "nsrl/detectors.hpp"
#include "nsrl/dirichlet.hpp"
#include "nsrl/error.hpp"
#include "permutation.hpp"

namespace nsrl {

void DetectorConfig::validate() const {
  if (n_permutations < 19) throw ValidationError("detector: n_permutations must be >= 19");
  if (!(significance > 0.0 && significance < 1.0)) throw ValidationError("detector: significance must lie in (0, 1)");
  if (min_segment < 2) throw ValidationError("detector: min_segment must be >= 2");
  encoding.validate();
}

int DetectorConfig::permutations_for(long rows) const {
  return scale_permutations && rows > 5000 ? std::max(n_permutations, 499) : n_permutations;
}

namespace {

SplitScan scan_with_total(const Eigen::MatrixXd& samples, int min_segment, const DirichletStats& total,
                          double full_ll) {
  const long n = samples.rows();
  const auto d = static_cast<int>(samples.cols());
  SplitScan out;
  out.statistic = -std::numeric_limits<double>::infinity();
  DirichletStats left = DirichletStats::zeros(d);
  Eigen::VectorXd left_alpha, right_alpha;
  const Eigen::MatrixXd logs = samples.array().log();
  for (long tau = 1; tau <= n - min_segment; ++tau) {
    left.n += 1;
    left.sum_log += logs.row(tau - 1).transpose();
    left.sum_x += samples.row(tau - 1).transpose();
    left.sum_x2 += samples.row(tau - 1).array().square().matrix().transpose();
    if (tau < min_segment) continue;
    const DirichletStats right = total - left;
    DirichletFit fl = dirichlet_fit_or_best(left, left_alpha.size() ? &left_alpha : nullptr);
    DirichletFit fr = dirichlet_fit_or_best(right, right_alpha.size() ? &right_alpha : nullptr);
    left_alpha = fl.alpha;
    right_alpha = fr.alpha;
    const double stat = fl.log_likelihood + fr.log_likelihood - full_ll;
    out.profile.push_back(stat);
    if (stat > out.statistic) {
      out.statistic = stat;
      out.location = tau;
    }
  }
  return out;
}

void require_length(long rows, int min_segment) {
  if (rows < 2L * min_segment) throw ValidationError("detector: input shorter than two minimum segments");
}

}  // namespace

SplitScan dirichlet_split_scan(const Eigen::MatrixXd& samples, int min_segment) {
  require_length(samples.rows(), min_segment);
  const DirichletStats total = DirichletStats::of(samples);
  return scan_with_total(samples, min_segment, total, dirichlet_fit_or_best(total).log_likelihood);
}

PermutationTest odcp_test(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng) {
  config.validate();
  require_length(samples.rows(), config.min_segment);
  const DirichletStats total = DirichletStats::of(samples);
  const double full_ll = dirichlet_fit_or_best(total).log_likelihood;
  const SplitScan observed = scan_with_total(samples, config.min_segment, total, full_ll);

  const int n_perm = config.permutations_for(samples.rows());
  const int allowed = detail::max_exceedances(config.significance, n_perm);
  const std::uint64_t base = rng.next_u64();
  PermutationTest out{observed.location, observed.statistic, 1.0, 0, false};
  int exceed = 0;
  std::vector<int> order;
  Eigen::MatrixXd shuffled(samples.rows(), samples.cols());
  for (int j = 0; j < n_perm; ++j) {
    // Each replicate has its own stream, so any evaluation order gives the same result.
    Rng stream = Rng::derive(base, {static_cast<std::uint64_t>(j)});
    order = detail::iota(static_cast<int>(samples.rows()));
    detail::shuffle(order, stream);
    for (long i = 0; i < samples.rows(); ++i) shuffled.row(i) = samples.row(order[i]);
    const double stat = scan_with_total(shuffled, config.min_segment, total, full_ll).statistic;
    if (detail::exceeds(stat, observed.statistic)) ++exceed;
    ++out.permutations_run;
    if (config.early_stop && exceed > allowed) break;
  }
  out.p_value = (1.0 + exceed) / (1.0 + out.permutations_run);
  out.significant = out.permutations_run == n_perm && out.p_value <= config.significance;
  return out;
}

std::optional<Detection> odcp_single(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng) {
  const PermutationTest t = odcp_test(samples, config, rng);
  if (!t.significant) return std::nullopt;
  return Detection{t.location, t.statistic, t.p_value};
}

DetectionReport odcp_multiple(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng) {
  config.validate();
  require_length(samples.rows(), config.min_segment);
  const std::uint64_t base = rng.next_u64();
  std::vector<Detection> found;
  std::function<void(long, long)> recurse = [&](long lo, long hi) {
    if (hi - lo < 2L * config.min_segment) return;
    Rng stream = Rng::derive(base, {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi)});
    const auto det = odcp_single(samples.middleRows(lo, hi - lo), config, stream);
    if (!det) return;
    const long at = lo + det->location;
    found.push_back({at, det->statistic, det->p_value});
    recurse(lo, at);
    recurse(at, hi);
  };
  recurse(0, samples.rows());
  std::sort(found.begin(), found.end(), [](const Detection& a, const Detection& b) { return a.location < b.location; });
  DetectionReport report;
  for (const auto& d : found) {
    report.changepoints.push_back(d.location);
    report.details.push_back(d);
  }
  return report;
}

}  // namespace nsrl
