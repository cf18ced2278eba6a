#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nsrl/encoding.hpp"
#include "nsrl/rng.hpp"

namespace nsrl {

struct DetectorConfig {
  int n_permutations = 199;
  double significance = 0.05;
  int min_segment = 2;  // rows on each side of a split
  EncodingConfig encoding;
  /// Use 499 permutations once the input exceeds 5000 rows.
  bool scale_permutations = true;
  /// Stop permuting once the test can no longer reject; the decision is the
  /// same as with the full permutation set.
  bool early_stop = true;
  int max_changepoints = std::numeric_limits<int>::max();

  void validate() const;
  int permutations_for(long rows) const;
};

struct Detection {
  long location = 0;  // first row (or epoch) of the new segment
  double statistic = 0.0;
  double p_value = 1.0;
};

struct DetectionReport {
  std::vector<long> changepoints;
  std::vector<Detection> details;  // aligned with changepoints
};

/// Best split of one segment under a two-sample statistic.
struct SplitScan {
  long location = 0;
  double statistic = 0.0;
  std::vector<double> profile;  // statistic for location = min_segment + k
};

struct PermutationTest {
  long location = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations_run = 0;
  bool significant = false;
};

/// Dirichlet likelihood-ratio profile: LL(left) + LL(right) - LL(all), each
/// term at its maximum-likelihood concentration.
SplitScan dirichlet_split_scan(const Eigen::MatrixXd& samples, int min_segment);

/// Permutation test of the maximal likelihood ratio against row shuffles.
/// p = (1 + #{shuffled max >= observed}) / (1 + permutations).
PermutationTest odcp_test(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng);

std::optional<Detection> odcp_single(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng);

/// Binary segmentation with odcp_single.
DetectionReport odcp_multiple(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng);

/// Energy-distance split profile (Euclidean distance, exponent 1), scaled by
/// m n / (m + n).
SplitScan energy_split_scan(const Eigen::MatrixXd& samples, int min_segment);

/// One round of E-divisive: the best split of the whole input, kept if the
/// permutation test rejects.
std::optional<Detection> ecp_single(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng);

/// E-divisive: repeatedly split the segment with the largest energy
/// statistic while the within-segment permutation test rejects.
DetectionReport ecp_detect(const Eigen::MatrixXd& samples, const DetectorConfig& config, Rng& rng);

}  // namespace nsrl
