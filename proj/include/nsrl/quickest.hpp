#pragma once

#include <span>
#include <vector>

#include "nsrl/agents.hpp"
#include "nsrl/envs.hpp"

namespace nsrl {

/// Mass added to every transition probability before renormalising, so the
/// likelihood ratios below never divide by zero.
inline constexpr double kProbabilitySmoothing = 1e-6;

/// (p + 1e-6) / (1 + |S| 1e-6) for entry `next` of `row`.
double smoothed_probability(std::span<const double> row, int next);

/// KL(P1(s, a, .) || P0(s, a, .)) with smoothed rows.
double transition_kl(const MdpModel& pre, const MdpModel& post, int s, int a);

/// Per-state argmax_a KL(P1(s, a, .) || P0(s, a, .)); ties go to the lowest action.
PolicySpec kl_policy(const MdpModel& pre, const MdpModel& post);

enum class SrPhase { follow_pre, follow_kl, follow_post };

struct SrState {
  double statistic = 0.0;
  double lower = 500.0;   // B
  double upper = 1000.0;  // A
  SrPhase phase = SrPhase::follow_pre;
};

/// follow_pre below B, follow_kl on [B, A), follow_post from A.
SrPhase sr_phase(double statistic, double lower, double upper);

/// SR <- (1 + SR) * ratio, then re-derive the phase.
SrState sr_advance(SrState state, double ratio);

/// One Shiryaev-Roberts step on an observed transition, with ratio
/// P1(s, a, s') / P0(s, a, s') on smoothed rows.
SrState sr_update(SrState state, const ExperienceTuple& tuple, int action, const MdpModel& pre,
                  const MdpModel& post);

/// Two-threshold strategy: optimal pre-change policy while SR < B, the KL
/// policy on [B, A), and the post-change optimal policy once SR >= A (the
/// declared change; the statistic is frozen afterwards).
class TwoThresholdSwitcher : public Controller {
 public:
  TwoThresholdSwitcher(const MdpModel& pre, const MdpModel& post, double lower, double upper,
                       double vi_tolerance = 1e-8);

  std::string name() const override { return "sr_two_threshold"; }
  int act(int state) override;
  void observe(const ExperienceTuple& tuple, int action) override;
  AgentReport report() const override;

  const SrState& sr() const { return sr_; }

 private:
  MdpModel pre_;
  MdpModel post_;
  std::vector<int> pi_pre_;
  std::vector<int> pi_kl_;
  std::vector<int> pi_post_;
  SrState sr_;
  std::vector<Detection> detections_;
};

/// Markov chain of one context under its optimal policy.
struct ChainModel {
  int n_states = 0;
  std::vector<double> transition;  // row-major, unsmoothed
  std::vector<double> stationary;

  static ChainModel of(const MdpModel& model, const std::vector<int>& policy);
  double log_prob(int s, int next) const;  // smoothed
  double log_initial(int s) const;         // smoothed
};

struct CusumState {
  long m = 0;
  int threshold = 20;  // K
};

/// m <- max(0, m + sign(llr)); returns true when m reaches the threshold.
bool cusum_advance(CusumState& state, double llr);

/// log P_post(block) - log P_pre(block), each the stationary probability of
/// the first state times the chain transitions. Returns false (block
/// skipped) when some transition has probability zero under both chains.
bool block_log_ratio(std::span<const int> block, const ChainModel& pre, const ChainModel& post, double& llr);

struct CdmConfig {
  int threshold = 20;
  int block_length = 20;
  /// false: contiguous blocks from epoch 0 (P-CDM). true: each block starts
  /// after a gap drawn uniformly from [0, max_gap] (NP-CDM).
  bool randomized = false;
  int max_gap = 20;
};

struct CdmResult {
  std::vector<long> detections;  // estimated change epochs
  std::vector<long> alarms;      // epochs at which m reached K
  long skipped_blocks = 0;
};

/// Runs the sign-count detector on a state stream. The hypotheses start as
/// (pattern[0] -> pattern[1]) and advance along the pattern after each alarm,
/// wrapping around so the detector keeps running to the horizon. The change
/// estimate is the first epoch of the block where m last left zero.
CdmResult cdm_detect(std::span<const int> states, const std::vector<ChainModel>& chains,
                     const std::vector<int>& pattern, const CdmConfig& config, Rng& rng);

/// State stream whose chain follows the schedule's active context.
std::vector<int> simulate_chain_stream(const std::vector<ChainModel>& chains, const ChangepointSchedule& schedule,
                                       int initial_state, Rng& rng);

}  // namespace nsrl
