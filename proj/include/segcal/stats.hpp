#ifndef SEGCAL_STATS_HPP
#define SEGCAL_STATS_HPP

#include <cstdint>
#include <vector>

namespace segcal {

struct BootstrapConfig {
  int resamples = 100;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
  double alpha = 0.01;
};

enum class Stat { Mean, Median };

struct CiResult {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile-method bootstrap CI. Inputs are canonically sorted before
// resample indices are drawn, which makes the result permutation-invariant
// under a fixed seed.
CiResult bootstrap_ci(const std::vector<double>& values, Stat stat,
                      const BootstrapConfig& cfg);

struct PairedTestResult {
  double p_value = 1.0;
  bool significant = false;
  double mean_difference = 0.0;  // mean(a - b) on the full sample
};

// Bootstrap over paired resamples of the mean difference a - b. Two-tailed p
// with +1 smoothing: 2 * min((#{d<=0}+1)/(n+1), (#{d>=0}+1)/(n+1)), capped at 1.
PairedTestResult paired_difference_test(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        const BootstrapConfig& cfg);

// Quantile with linear interpolation between closest ranks; input copied and
// sorted internally.
double quantile(std::vector<double> values, double q);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation,
// absolute accuracy ~1e-10 over the domain used here.
double incomplete_beta(double a, double b, double x);

// Two-tailed p-value of Student's t with df degrees of freedom.
double student_t_two_tailed(double t, double df);

// Area under the ROC curve for scores where positives are expected to score
// higher; ties count half.
double auroc(const std::vector<double>& negatives,
             const std::vector<double>& positives);

}  // namespace segcal

#endif
