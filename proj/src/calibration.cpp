#include "segcal/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace segcal {

namespace {

struct RegionIter {
  const VoxelMask* region;
  std::size_t n;

  template <typename F>
  void for_each(F&& f) const {
    if (region == nullptr) {
      for (std::size_t i = 0; i < n; ++i) f(i);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (region->mask[i]) f(i);
    }
  }
};

RegionIter check_inputs(const ProbabilityVolume& p, const LabelVolume& y,
                        const VoxelMask* region, const char* op) {
  require_same_meta(p.meta, y.meta, op);
  if (p.classes != y.classes)
    throw ValidationError(std::string(op) + ": class count mismatch");
  if (region != nullptr) {
    require_same_meta(p.meta, region->meta, op);
    if (region->count() == 0)
      throw ValidationError(std::string(op) + ": empty region");
  }
  return RegionIter{region, p.size()};
}

// Per-voxel probabilities with sigmoid-head renormalization. Falls back to
// uniform when the channel sum vanishes.
void normalized_voxel(const ProbabilityVolume& p, std::size_t i,
                      std::vector<double>& out) {
  const float* v = p.voxel(i);
  const int K = p.classes;
  out.resize(K);
  if (p.normalized) {
    for (int k = 0; k < K; ++k) out[k] = v[k];
    return;
  }
  double s = 0.0;
  for (int k = 0; k < K; ++k) s += v[k];
  if (s < 1e-12) {
    for (int k = 0; k < K; ++k) out[k] = 1.0 / K;
  } else {
    for (int k = 0; k < K; ++k) out[k] = v[k] / s;
  }
}

}  // namespace

double nll(const ProbabilityVolume& p, const LabelVolume& y,
           const VoxelMask* region) {
  auto it = check_inputs(p, y, region, "nll");
  double sum = 0.0;
  std::size_t n = 0;
  std::vector<double> q;
  it.for_each([&](std::size_t i) {
    normalized_voxel(p, i, q);
    double pt = std::clamp(q[y.labels[i]], kLogEps, 1.0);
    sum += -std::log(pt);
    ++n;
  });
  return sum / double(n);
}

double brier(const ProbabilityVolume& p, const LabelVolume& y,
             const VoxelMask* region) {
  auto it = check_inputs(p, y, region, "brier");
  const int K = p.classes;
  double sum = 0.0;
  std::size_t n = 0;
  it.for_each([&](std::size_t i) {
    const float* v = p.voxel(i);
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      double d = double(v[k]) - (y.labels[i] == k ? 1.0 : 0.0);
      acc += d * d;
    }
    sum += acc / K;
    ++n;
  });
  return sum / double(n);
}

ReliabilityReport reliability_from_samples(
    const std::vector<std::pair<double, bool>>& samples, int num_bins) {
  if (num_bins < 1)
    throw ValidationError("reliability: num_bins must be >= 1");
  if (samples.empty())
    throw ValidationError("reliability: empty sample set");

  ReliabilityReport rep;
  rep.bins.resize(num_bins);
  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<std::size_t> correct(num_bins, 0);
  for (int m = 0; m < num_bins; ++m) {
    rep.bins[m].lo = double(m) / num_bins;
    rep.bins[m].hi = double(m + 1) / num_bins;
  }
  for (const auto& [c, ok] : samples) {
    // Bin m holds ((m-1)/M, m/M]; confidence 0 cannot occur post-argmax.
    int m = int(std::ceil(c * num_bins)) - 1;
    m = std::clamp(m, 0, num_bins - 1);
    rep.bins[m].count++;
    conf_sum[m] += c;
    if (ok) correct[m]++;
  }
  rep.total = samples.size();
  double ece = 0.0;
  for (int m = 0; m < num_bins; ++m) {
    auto& b = rep.bins[m];
    if (b.count > 0) {
      b.accuracy = double(correct[m]) / double(b.count);
      b.mean_confidence = conf_sum[m] / double(b.count);
      ece += (double(b.count) / double(rep.total)) *
             std::abs(b.accuracy - b.mean_confidence);
    }
  }
  rep.ece = ece;
  return rep;
}

ReliabilityReport reliability(const ProbabilityVolume& p, const LabelVolume& y,
                              const VoxelMask* region, int num_bins) {
  auto it = check_inputs(p, y, region, "reliability");
  std::vector<std::pair<double, bool>> samples;
  std::vector<double> q;
  it.for_each([&](std::size_t i) {
    normalized_voxel(p, i, q);
    int best = 0;
    for (int k = 1; k < p.classes; ++k)
      if (q[k] > q[best]) best = k;
    samples.emplace_back(q[best], best == y.labels[i]);
  });
  return reliability_from_samples(samples, num_bins);
}

double ece_percent(const ReliabilityReport& report) { return 100.0 * report.ece; }

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string render_reliability_csv(const ReliabilityReport& report,
                                   std::size_t min_count) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,accuracy,mean_confidence\n";
  for (const auto& b : report.bins) {
    if (b.count <= min_count) continue;
    out << format_real(b.lo) << ',' << format_real(b.hi) << ',' << b.count
        << ',' << format_real(b.accuracy) << ',' << format_real(b.mean_confidence)
        << '\n';
  }
  return out.str();
}

}  // namespace segcal
