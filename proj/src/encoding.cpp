#include "nsrl/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nsrl/error.hpp"

namespace nsrl {

RewardBinning RewardBinning::fit(std::span<const double> rewards, double tolerance, int max_bins) {
  if (max_bins < 1) throw ValidationError("reward binning: max_bins must be >= 1");
  RewardBinning b;
  if (rewards.empty()) return b;
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct{sorted.front()};
  for (double r : sorted) {
    if (r - distinct.back() > tolerance) distinct.push_back(r);
  }
  if (static_cast<int>(distinct.size()) <= max_bins) {
    // Edges sit halfway between neighbouring distinct values.
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      b.upper_edges_.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    }
    return b;
  }
  b.exact_ = false;
  const std::size_t n = sorted.size();
  // Quantile cut values, each moved up to the midpoint with the next
  // distinct value so no bin is empty on the fitted sample.
  for (int q = 1; q < max_bins; ++q) {
    const double cut = sorted[std::min(n - 1, (n * static_cast<std::size_t>(q)) / max_bins)];
    const auto above = std::upper_bound(distinct.begin(), distinct.end(), cut + tolerance);
    if (above == distinct.end()) break;
    const double edge = 0.5 * (cut + *above);
    if (b.upper_edges_.empty() || edge > b.upper_edges_.back()) b.upper_edges_.push_back(edge);
  }
  return b;
}

int RewardBinning::bin(double reward) const {
  return static_cast<int>(std::lower_bound(upper_edges_.begin(), upper_edges_.end(), reward) -
                          upper_edges_.begin());
}

TupleAlphabet TupleAlphabet::full(int n_states, RewardBinning binning) {
  if (n_states < 1) throw ValidationError("alphabet: n_states must be positive");
  TupleAlphabet a;
  a.n_states_ = n_states;
  a.binning_ = std::move(binning);
  a.size_ = n_states * n_states * a.binning_.count();
  a.cell_of_triple_.resize(a.size_);
  std::iota(a.cell_of_triple_.begin(), a.cell_of_triple_.end(), 0);
  return a;
}

TupleAlphabet TupleAlphabet::compact(std::span<const ExperienceTuple> tuples, int n_states,
                                     RewardBinning binning, int max_categories) {
  if (max_categories < 2) throw ValidationError("alphabet: max_categories must be >= 2");
  TupleAlphabet a = full(n_states, std::move(binning));
  std::vector<long> freq(a.cell_of_triple_.size(), 0);
  for (const auto& t : tuples) ++freq[a.triple(t)];

  std::vector<int> seen;
  for (int k = 0; k < static_cast<int>(freq.size()); ++k) {
    if (freq[k] > 0) seen.push_back(k);
  }
  std::fill(a.cell_of_triple_.begin(), a.cell_of_triple_.end(), -1);
  if (static_cast<int>(seen.size()) <= max_categories) {
    for (std::size_t c = 0; c < seen.size(); ++c) a.cell_of_triple_[seen[c]] = static_cast<int>(c);
    a.size_ = static_cast<int>(seen.size());
  } else {
    std::stable_sort(seen.begin(), seen.end(), [&](int x, int y) { return freq[x] > freq[y]; });
    const int kept = max_categories - 1;
    std::vector<int> top(seen.begin(), seen.begin() + kept);
    std::sort(top.begin(), top.end());
    for (int c = 0; c < kept; ++c) a.cell_of_triple_[top[c]] = c;
    a.size_ = max_categories;
  }
  // Unseen triples (possible for tuples outside the fitting set) go to the last cell.
  for (int& c : a.cell_of_triple_) {
    if (c < 0) c = a.size_ - 1;
  }
  if (a.size_ == 0) a.size_ = 1;
  return a;
}

int TupleAlphabet::triple(const ExperienceTuple& t) const {
  if (t.state < 0 || t.state >= n_states_ || t.next_state < 0 || t.next_state >= n_states_) {
    throw ValidationError("alphabet: state index out of range");
  }
  return (t.state * binning_.count() + binning_.bin(t.reward)) * n_states_ + t.next_state;
}

int TupleAlphabet::cell(const ExperienceTuple& t) const { return cell_of_triple_[triple(t)]; }

void EncodingConfig::validate() const {
  if (window < 1) throw ValidationError("encoding: window must be >= 1");
  if (stride < 1) throw ValidationError("encoding: stride must be >= 1");
  if (!(smoothing > 0.0)) throw ValidationError("encoding: smoothing must be positive");
}

Eigen::MatrixXd encode_tuples(std::span<const ExperienceTuple> tuples, const TupleAlphabet& alphabet,
                              const EncodingConfig& config) {
  config.validate();
  const auto n = static_cast<long>(tuples.size());
  if (n == 0 || config.window > n) throw ValidationError("encode_tuples: window longer than the sequence");
  const long rows = (n - config.window) / config.stride + 1;
  const int d = alphabet.size();
  std::vector<int> cells(tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) cells[i] = alphabet.cell(tuples[i]);

  const double denom = config.window + d * config.smoothing;
  Eigen::MatrixXd out(rows, d);
  for (long k = 0; k < rows; ++k) {
    Eigen::VectorXd counts = Eigen::VectorXd::Constant(d, config.smoothing);
    const long begin = k * config.stride;
    for (long i = begin; i < begin + config.window; ++i) counts[cells[i]] += 1.0;
    out.row(k) = counts.transpose() / denom;
  }
  return out;
}

}  // namespace nsrl
