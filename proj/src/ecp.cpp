#include <algorithm>
#include <limits>

#include "nsrl/detectors.hpp"
#include "nsrl/error.hpp"
#include "permutation.hpp"

namespace nsrl {

namespace {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
  const long n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    }
  }
  return d;
}

/// Scan over the rows idx[0..m); location is relative to idx.
SplitScan scan_indices(const Eigen::MatrixXd& dist, const std::vector<int>& idx, int min_segment) {
  const long m = static_cast<long>(idx.size());
  SplitScan out;
  out.statistic = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (long i = 0; i < m; ++i) {
    for (long j = i + 1; j < m; ++j) total += dist(idx[i], idx[j]);
  }
  double within_left = 0.0;
  double within_right = total;
  for (long tau = 1; tau <= m - min_segment; ++tau) {
    // Row tau - 1 moves from the right block to the left block.
    const int moved = idx[tau - 1];
    for (long i = 0; i < tau - 1; ++i) within_left += dist(idx[i], moved);
    for (long j = tau; j < m; ++j) within_right -= dist(moved, idx[j]);
    if (tau < min_segment) continue;
    const double a = static_cast<double>(tau);
    const double b = static_cast<double>(m - tau);
    const double between = total - within_left - within_right;
    const double e = 2.0 * between / (a * b) - within_left / (a * (a - 1.0) / 2.0) -
                     within_right / (b * (b - 1.0) / 2.0);
    const double stat = a * b / (a + b) * e;
    out.profile.push_back(stat);
    if (stat > out.statistic) {
      out.statistic = stat;
      out.location = tau;
    }
  }
  return out;
}

struct Segment {
  long begin;
  long end;
  SplitScan scan;
};

}  // namespace

SplitScan energy_split_scan(const Eigen::MatrixXd& samples, int min_segment) {
  if (samples.rows() < 2L * min_segment) throw ValidationError("detector: input shorter than two minimum segments");
  return scan_indices(pairwise_distances(samples), detail::iota(static_cast<int>(samples.rows())), min_segment);
}

std::optional<Detection> ecp_single(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng) {
  DetectorConfig one = config;
  one.max_changepoints = 1;
  const DetectionReport r = ecp_detect(samples, one, rng);
  if (r.details.empty()) return std::nullopt;
  return r.details.front();
}

DetectionReport ecp_detect(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng) {
  config.validate();
  const long n = samples.rows();
  if (n < 2L * config.min_segment) throw ValidationError("detector: input shorter than two minimum segments");
  const Eigen::MatrixXd dist = pairwise_distances(samples);
  const std::uint64_t base = rng.next_u64();
  const int n_perm = config.permutations_for(n);
  const int allowed = detail::max_exceedances(config.significance, n_perm);

  auto make_segment = [&](long b, long e) {
    Segment s{b, e, {}};
    if (e - b >= 2L * config.min_segment) {
      std::vector<int> idx(e - b);
      std::iota(idx.begin(), idx.end(), static_cast<int>(b));
      s.scan = scan_indices(dist, idx, config.min_segment);
    } else {
      s.scan.statistic = -std::numeric_limits<double>::infinity();
    }
    return s;
  };

  std::vector<Segment> segments{make_segment(0, n)};
  std::vector<Detection> found;
  for (std::uint64_t round = 0; static_cast<int>(found.size()) < config.max_changepoints; ++round) {
    auto best = std::max_element(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
      return a.scan.statistic < b.scan.statistic;
    });
    if (best == segments.end() || !std::isfinite(best->scan.statistic)) break;
    const double observed = best->scan.statistic;

    int exceed = 0;
    int run = 0;
    for (int j = 0; j < n_perm; ++j) {
      Rng stream = Rng::derive(base, {round, static_cast<std::uint64_t>(j)});
      double perm_max = -std::numeric_limits<double>::infinity();
      for (const Segment& s : segments) {
        if (!std::isfinite(s.scan.statistic)) continue;
        std::vector<int> idx(s.end - s.begin);
        std::iota(idx.begin(), idx.end(), static_cast<int>(s.begin));
        detail::shuffle(idx, stream);
        perm_max = std::max(perm_max, scan_indices(dist, idx, config.min_segment).statistic);
      }
      if (detail::exceeds(perm_max, observed)) ++exceed;
      ++run;
      if (config.early_stop && exceed > allowed) break;
    }
    const double p = (1.0 + exceed) / (1.0 + run);
    if (run < n_perm || p > config.significance) break;

    const long at = best->begin + best->scan.location;
    found.push_back({at, observed, p});
    const long b = best->begin;
    const long e = best->end;
    *best = make_segment(b, at);
    segments.push_back(make_segment(at, e));
  }

  std::sort(found.begin(), found.end(), [](const Detection& a, const Detection& b) { return a.location < b.location; });
  DetectionReport report;
  for (const auto& d : found) {
    report.changepoints.push_back(d.location);
    report.details.push_back(d);
  }
  return report;
}

}  // namespace nsrl
