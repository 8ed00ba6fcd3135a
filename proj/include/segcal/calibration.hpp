#ifndef SEGCAL_CALIBRATION_HPP
#define SEGCAL_CALIBRATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "segcal/volume.hpp"

namespace segcal {

// Probabilities are clamped to [kLogEps, 1] before any logarithm; sigmoid-head
// models can emit exact zeros after float32 rounding.
constexpr double kLogEps = 1e-12;

struct ReliabilityBin {
  double lo = 0.0, hi = 0.0;       // confidence interval ((m-1)/M, m/M]
  std::size_t count = 0;
  double accuracy = 0.0;           // meaningful only when count > 0
  double mean_confidence = 0.0;
};

struct ReliabilityReport {
  std::vector<ReliabilityBin> bins;
  std::size_t total = 0;
  double ece = 0.0;
};

// Mean negative log-likelihood of the true class, optionally restricted to a
// region. Unnormalized volumes are renormalized per voxel first.
double nll(const ProbabilityVolume& p, const LabelVolume& y,
           const VoxelMask* region = nullptr);

// Brier score with the 1/K class average. Uses raw channels, no
// renormalization.
double brier(const ProbabilityVolume& p, const LabelVolume& y,
             const VoxelMask* region = nullptr);

// Bins (confidence of argmax class, correctness) samples into num_bins
// left-open right-closed intervals and computes ECE.
ReliabilityReport reliability(const ProbabilityVolume& p, const LabelVolume& y,
                              const VoxelMask* region = nullptr,
                              int num_bins = 10);

// Reliability over already-extracted (confidence, correct) samples. The
// volume overload reduces to this.
ReliabilityReport reliability_from_samples(
    const std::vector<std::pair<double, bool>>& samples, int num_bins);

double ece_percent(const ReliabilityReport& report);

// CSV rows (bin_lo, bin_hi, count, accuracy, mean_confidence) for bins with
// count strictly greater than min_count.
std::string render_reliability_csv(const ReliabilityReport& report,
                                   std::size_t min_count = 0);

// Formats a real with 9 significant digits, the contract for all CSV output.
std::string format_real(double v);

}  // namespace segcal

#endif
