#include "nsrl/experience_detector.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nsrl/error.hpp"

namespace nsrl {

DetectorMethod parse_detector_method(const std::string& name) {
  if (name == "odcp") return DetectorMethod::odcp;
  if (name == "ecp") return DetectorMethod::ecp;
  throw ConfigError("unknown detector method '" + name + "' (expected odcp or ecp)");
}

std::string to_string(DetectorMethod method) { return method == DetectorMethod::odcp ? "odcp" : "ecp"; }

void ExperienceDetectorConfig::validate() const {
  detector.validate();
  if (max_categories < 2) throw ValidationError("detector: max_categories must be >= 2");
  if (max_reward_bins < 1) throw ValidationError("detector: max_reward_bins must be >= 1");
  if (check_every < 1) throw ValidationError("detector: check_every must be >= 1");
  if (max_lag < 0) throw ValidationError("detector: max_lag must be >= 0");
  if (history < 0) throw ValidationError("detector: history must be >= 0");
  if (history > 0 && history < 2 * detector.min_segment) {
    throw ValidationError("detector: history must cover two minimum segments");
  }
}

namespace {

double xlogx(double c) { return c > 0.0 ? c * std::log(c) : 0.0; }

}  // namespace

long refine_changepoint(std::span<const ExperienceTuple> tuples, const TupleAlphabet& alphabet,
                        std::size_t first, std::size_t last) {
  const std::size_t n = tuples.size();
  first = std::max<std::size_t>(first, 1);
  last = std::min(last, n - 1);
  if (n < 2 || first > last) throw ValidationError("refine_changepoint: empty candidate range");

  std::unordered_map<int, int> local;
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [it, inserted] = local.try_emplace(alphabet.triple(tuples[i]), static_cast<int>(local.size()));
    ids[i] = it->second;
  }
  std::vector<double> left(local.size(), 0.0), right(local.size(), 0.0);
  for (int id : ids) right[id] += 1.0;
  // Maximised log-likelihood of a block is sum c log c - m log m.
  double left_terms = 0.0;
  double right_terms = 0.0;
  for (double c : right) right_terms += xlogx(c);

  long best = static_cast<long>(first);
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= last; ++t) {
    const int id = ids[t - 1];
    left_terms += xlogx(left[id] + 1.0) - xlogx(left[id]);
    right_terms += xlogx(right[id] - 1.0) - xlogx(right[id]);
    left[id] += 1.0;
    right[id] -= 1.0;
    if (t < first) continue;
    const double ll = left_terms - xlogx(static_cast<double>(t)) + right_terms -
                      xlogx(static_cast<double>(n - t));
    if (ll > best_ll + 1e-12) {
      best_ll = ll;
      best = static_cast<long>(t);
    }
  }
  return best;
}

namespace {

struct WindowScan {
  TupleAlphabet alphabet;
  Eigen::MatrixXd rows;
  DetectionReport windows;  // locations are row indices
};

WindowScan encode_windows(std::span<const ExperienceTuple> tuples, int n_states,
                          const ExperienceDetectorConfig& config) {
  config.validate();
  std::vector<double> rewards(tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) rewards[i] = tuples[i].reward;
  WindowScan out{TupleAlphabet::compact(tuples, n_states,
                                        RewardBinning::fit(rewards, config.reward_tolerance, config.max_reward_bins),
                                        config.max_categories),
                 {},
                 {}};
  out.rows = encode_tuples(tuples, out.alphabet, config.detector.encoding);
  return out;
}

void test_windows(WindowScan& scan, const ExperienceDetectorConfig& config, Rng& rng, bool multiple) {
  if (config.method == DetectorMethod::odcp) {
    if (multiple) {
      scan.windows = odcp_multiple(scan.rows, config.detector, rng);
    } else if (auto d = odcp_single(scan.rows, config.detector, rng)) {
      scan.windows.changepoints.push_back(d->location);
      scan.windows.details.push_back(*d);
    }
  } else {
    if (multiple) {
      scan.windows = ecp_detect(scan.rows, config.detector, rng);
    } else if (auto d = ecp_single(scan.rows, config.detector, rng)) {
      scan.windows.changepoints.push_back(d->location);
      scan.windows.details.push_back(*d);
    }
  }
}

DetectionReport to_epochs(std::span<const ExperienceTuple> tuples, const WindowScan& scan,
                          const ExperienceDetectorConfig& config) {
  const EncodingConfig& enc = config.detector.encoding;
  const long n = static_cast<long>(tuples.size());
  const long w = enc.window;
  std::vector<long> boundary;
  for (long k : scan.windows.changepoints) boundary.push_back(k * enc.stride + (enc.window - enc.stride) / 2);

  DetectionReport out;
  for (std::size_t j = 0; j < boundary.size(); ++j) {
    long at = boundary[j];
    if (config.refine) {
      const long lo = std::max({0L, at - 2 * w, j > 0 ? boundary[j - 1] : 0L});
      const long hi = std::min({n, at + 2 * w, j + 1 < boundary.size() ? boundary[j + 1] : n});
      const auto region = tuples.subspan(lo, hi - lo);
      const long first = std::max(1L, at - w - lo);
      const long last = std::min(hi - lo - 1, at + w - lo);
      if (first <= last) at = lo + refine_changepoint(region, scan.alphabet, first, last);
    }
    Detection d = scan.windows.details[j];
    d.location = tuples[at].epoch;
    out.changepoints.push_back(d.location);
    out.details.push_back(d);
  }
  return out;
}

}  // namespace

DetectionReport detect_in_tuples(std::span<const ExperienceTuple> tuples, int n_states,
                                 const ExperienceDetectorConfig& config, Rng& rng, bool multiple) {
  WindowScan scan = encode_windows(tuples, n_states, config);
  test_windows(scan, config, rng, multiple);
  return to_epochs(tuples, scan, config);
}

IncrementalDetector::IncrementalDetector(ExperienceDetectorConfig config, int n_states, std::uint64_t seed)
    : config_(std::move(config)), n_states_(n_states), seed_(seed) {
  config_.validate();
}

std::optional<Detection> IncrementalDetector::observe(const ExperienceTuple& tuple) {
  if (!enabled_) return std::nullopt;
  if (!suffix_.empty() && tuple.epoch != suffix_.back().epoch + 1) {
    throw ValidationError("IncrementalDetector: epochs must be consecutive");
  }
  suffix_.push_back(tuple);
  ++since_check_;
  if (since_check_ < static_cast<std::size_t>(config_.check_every)) return std::nullopt;

  const auto& enc = config_.detector.encoding;
  const long n = static_cast<long>(suffix_.size());
  const long windows = n >= enc.window ? (n - enc.window) / enc.stride + 1 : 0;
  if (windows == windows_at_last_test_ || windows < 2L * config_.detector.min_segment) return std::nullopt;
  since_check_ = 0;
  windows_at_last_test_ = windows;

  Rng rng = Rng::derive(seed_, {static_cast<std::uint64_t>(tests_run_++)});
  std::span<const ExperienceTuple> recent(suffix_);
  if (config_.history > 0 && windows > config_.history) {
    recent = recent.last(static_cast<std::size_t>((config_.history - 1) * enc.stride + enc.window));
  }
  WindowScan scan = encode_windows(recent, n_states_, config_);
  // The best split does not depend on the permutations, so an inadmissible one
  // is rejected before testing. A split pinned to the last admissible row may
  // sit before a change that is still accumulating evidence; wait for more
  // windows.
  const int min_segment = config_.detector.min_segment;
  const long best = config_.method == DetectorMethod::odcp ? dirichlet_split_scan(scan.rows, min_segment).location
                                                           : energy_split_scan(scan.rows, min_segment).location;
  const long lag = scan.rows.rows() - best;
  if (lag <= min_segment) return std::nullopt;
  if (config_.max_lag > 0 && lag > config_.max_lag) return std::nullopt;
  test_windows(scan, config_, rng, false);
  if (scan.windows.details.empty()) return std::nullopt;
  const DetectionReport report = to_epochs(recent, scan, config_);

  const Detection det = report.details.front();
  detections_.push_back(det);
  last_confirmed_ = det.location;
  suffix_.erase(suffix_.begin(), std::find_if(suffix_.begin(), suffix_.end(), [&](const ExperienceTuple& t) {
                  return t.epoch >= det.location;
                }));
  windows_at_last_test_ = 0;
  return det;
}

}  // namespace nsrl
