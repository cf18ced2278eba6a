#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "nsrl/mdp.hpp"

namespace nsrl {

/// Maps rewards to bins: the distinct observed values (within `tolerance`)
/// when there are at most `max_bins` of them, otherwise `max_bins` quantile bins.
class RewardBinning {
 public:
  static RewardBinning fit(std::span<const double> rewards, double tolerance = 1e-9, int max_bins = 16);

  int bin(double reward) const;
  int count() const { return static_cast<int>(upper_edges_.size()) + 1; }
  bool exact() const { return exact_; }

 private:
  // Bin b holds rewards in (upper_edges_[b-1], upper_edges_[b]].
  std::vector<double> upper_edges_;
  bool exact_ = true;
};

/// Categorical alphabet over (s, reward-bin, s') triples.
class TupleAlphabet {
 public:
  /// Every triple gets its own cell: d = |S|^2 * bins.
  static TupleAlphabet full(int n_states, RewardBinning binning);

  /// Only triples present in `tuples` get a cell. With more than
  /// `max_categories` of them, the most frequent max_categories - 1 keep their
  /// own cell and the rest share one (ties by triple index).
  static TupleAlphabet compact(std::span<const ExperienceTuple> tuples, int n_states,
                               RewardBinning binning, int max_categories = 64);

  /// Raw triple index (s * bins + bin) * |S| + s'.
  int triple(const ExperienceTuple& t) const;
  int cell(const ExperienceTuple& t) const;
  int size() const { return size_; }
  const RewardBinning& binning() const { return binning_; }

 private:
  int n_states_ = 0;
  RewardBinning binning_;
  std::vector<int> cell_of_triple_;
  int size_ = 0;
};

struct EncodingConfig {
  int window = 50;
  int stride = 50;  // stride == window gives disjoint windows
  double smoothing = 0.5;

  void validate() const;
};

/// Window k covers tuples [k * stride, k * stride + window). Each row is the
/// smoothed frequency vector (count + smoothing) / (window + d * smoothing).
/// Throws ValidationError when the window is longer than the sequence.
Eigen::MatrixXd encode_tuples(std::span<const ExperienceTuple> tuples, const TupleAlphabet& alphabet,
                              const EncodingConfig& config);

}  // namespace nsrl
