#ifndef SEGCAL_UNCERTAINTY_HPP
#define SEGCAL_UNCERTAINTY_HPP

#include <optional>
#include <utility>
#include <vector>

#include "segcal/volume.hpp"

namespace segcal {

// Mean binary entropy over a predicted segment, in nats.
struct SegmentUncertainty {
  int class_id = 1;
  double mean_entropy = 0.0;  // [0, ln 2]
  std::size_t segment_size = 0;
};

// Mean of -[q ln q + (1-q) ln(1-q)] over the voxels argmax-assigned to class
// k, with q the (renormalized) probability of class k. Empty predicted
// segment -> nullopt.
std::optional<SegmentUncertainty> mean_segment_entropy(
    const ProbabilityVolume& p, int k);

// Same computation over an externally supplied segment mask; used by tests
// that need to hold the segment fixed while perturbing probabilities.
std::optional<SegmentUncertainty> mean_entropy_over_mask(
    const ProbabilityVolume& p, int k, const VoxelMask& segment);

// ln(p / (1-p)) after clamping p into [clamp_eps, 1 - clamp_eps].
double logit(double p, double clamp_eps = 1e-4);

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  double slope = 0.0;      // regression of logit(dice) on mean_entropy
  double intercept = 0.0;
  std::size_t n = 0;
  bool degenerate = false;  // zero variance in either variable
};

// Pearson correlation between mean segment entropy and logit-transformed
// Dice, with a two-tailed t-test p-value and the least-squares line.
CorrelationResult correlate(
    const std::vector<std::pair<double, double>>& entropy_dice_pairs,
    double clamp_eps = 1e-4);

struct OodDecision {
  bool flagged = false;
  double score = 0.0;  // mean segment entropy, monotone OOD score
};

OodDecision ood_flag(const SegmentUncertainty& u, double threshold);

}  // namespace segcal

#endif
