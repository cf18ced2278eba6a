#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsrl/detectors.hpp"
#include "nsrl/mdp.hpp"

namespace nsrl {

enum class DetectorMethod { odcp, ecp };

DetectorMethod parse_detector_method(const std::string& name);
std::string to_string(DetectorMethod method);

struct ExperienceDetectorConfig {
  DetectorMethod method = DetectorMethod::odcp;
  DetectorConfig detector;
  int max_categories = 64;
  int max_reward_bins = 16;
  double reward_tolerance = 1e-9;
  /// Incremental mode runs at most once per this many new tuples, and only
  /// when a new encoding window has completed.
  int check_every = 25;
  /// Re-locate a window-level split to a single epoch by a categorical
  /// likelihood-ratio scan over the neighbouring windows.
  bool refine = true;
  /// Incremental mode accepts a split only within this many windows of the
  /// newest one; an older split would have been caught by an earlier test.
  /// 0 disables the bound.
  int max_lag = 8;
  /// Incremental mode tests only the newest this many windows of the suffix,
  /// so an old transient cannot mask a recent change. 0 tests the whole
  /// suffix.
  int history = 32;

  void validate() const;
};

/// Batch detection on a tuple stream. Locations are epochs (the first epoch
/// of each new segment). `multiple` selects binary segmentation / full
/// E-divisive instead of a single split.
DetectionReport detect_in_tuples(std::span<const ExperienceTuple> tuples, int n_states,
                                 const ExperienceDetectorConfig& config, Rng& rng, bool multiple);

/// Most likely single change epoch in tuples[lo, hi) under a categorical
/// model of (s, reward, s') triples; candidates are restricted to
/// [first, last].
long refine_changepoint(std::span<const ExperienceTuple> tuples, const TupleAlphabet& alphabet,
                        std::size_t first, std::size_t last);

/// Online detector over the suffix since the last confirmed change.
class IncrementalDetector {
 public:
  IncrementalDetector(ExperienceDetectorConfig config, int n_states, std::uint64_t seed);

  /// Appends a tuple; returns a detection when the suffix test rejects.
  std::optional<Detection> observe(const ExperienceTuple& tuple);

  /// Stops testing; later tuples are ignored.
  void disable() { enabled_ = false; }
  bool enabled() const { return enabled_; }

  long last_confirmed() const { return last_confirmed_; }
  const std::vector<Detection>& detections() const { return detections_; }
  long tests_run() const { return tests_run_; }

 private:
  ExperienceDetectorConfig config_;
  int n_states_;
  std::uint64_t seed_;
  std::vector<ExperienceTuple> suffix_;
  std::vector<Detection> detections_;
  long last_confirmed_ = 0;
  std::size_t since_check_ = 0;
  long windows_at_last_test_ = 0;
  long tests_run_ = 0;
  bool enabled_ = true;
};

}  // namespace nsrl
