#ifndef SEGCAL_ENSEMBLE_HPP
#define SEGCAL_ENSEMBLE_HPP

#include <string>
#include <vector>

#include "segcal/model.hpp"
#include "segcal/volume.hpp"

namespace segcal {

struct EnsembleConfig {
  std::vector<int> subsample_sizes{1, 2, 5, 10, 25, 50};
  int repeats = 10;
};

// Per-voxel per-class arithmetic mean of the member probabilities, float64
// accumulation. Normalized flag survives only if every member is normalized.
ProbabilityVolume ensemble_mean(const std::vector<ProbabilityVolume>& members);

// Mean of T stochastic forward passes with dropout active at inference.
ProbabilityVolume mc_dropout_mean(const ToyModel& model, const FeatureVolume& x,
                                  int samples, std::uint64_t seed);

enum class SweepMetric { Nll, Brier, Ece, Dice };
enum class SweepRegion { Whole, Box };

struct SweepRow {
  int members = 0;  // M
  int repeat_count = 0;
  SweepMetric metric{};
  SweepRegion region{};
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

const char* sweep_metric_name(SweepMetric m);
const char* sweep_region_name(SweepRegion r);

// Evaluates one metric for a single (prediction, truth) pair, optionally
// restricted to a region mask. Dice is the mean over foreground classes.
double evaluate_metric(SweepMetric metric, const ProbabilityVolume& pred,
                       const LabelVolume& truth, const VoxelMask* region,
                       int num_bins = 10);

// For each requested ensemble size M, draws `repeats` uniform member subsets
// without replacement, averages their predictions per test case, evaluates the
// metric, and reports mean plus bootstrap 95% CI over the repeat-level means.
// member_preds is indexed [member][case]; masks may be empty for whole-volume
// evaluation.
std::vector<SweepRow> m_sweep(
    const std::vector<std::vector<ProbabilityVolume>>& member_preds,
    const std::vector<LabelVolume>& truths, const std::vector<VoxelMask>& masks,
    SweepMetric metric, SweepRegion region, const EnsembleConfig& cfg,
    std::uint64_t seed);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// Uniform subset of size m drawn without replacement from [0, total).
std::vector<int> sample_subset(int total, int m, std::uint64_t seed);

}  // namespace segcal

#endif
