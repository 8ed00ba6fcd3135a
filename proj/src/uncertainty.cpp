#include "segcal/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "segcal/stats.hpp"

namespace segcal {

namespace {

// Binary entropy in nats with the 0 ln 0 = 0 convention.
double binary_entropy(double q) {
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
  return h;
}

std::optional<SegmentUncertainty> entropy_over(
    const ProbabilityVolume& p, int k,
    const std::vector<std::uint8_t>& segment) {
  SegmentUncertainty u;
  u.class_id = k;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!segment[i]) continue;
    sum += binary_entropy(double(p.voxel(i)[k]));
    ++u.segment_size;
  }
  if (u.segment_size == 0) return std::nullopt;
  u.mean_entropy = sum / double(u.segment_size);
  return u;
}

}  // namespace

std::optional<SegmentUncertainty> mean_segment_entropy(
    const ProbabilityVolume& p, int k) {
  if (k < 0 || k >= p.classes)
    throw ValidationError("mean_segment_entropy: class out of range");
  LabelVolume pred = argmax_labels(p);
  std::vector<std::uint8_t> seg(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) seg[i] = pred.labels[i] == k;
  return entropy_over(p, k, seg);
}

std::optional<SegmentUncertainty> mean_entropy_over_mask(
    const ProbabilityVolume& p, int k, const VoxelMask& segment) {
  require_same_meta(p.meta, segment.meta, "mean_entropy_over_mask");
  return entropy_over(p, k, segment.mask);
}

double logit(double p, double clamp_eps) {
  p = std::clamp(p, clamp_eps, 1.0 - clamp_eps);
  return std::log(p / (1.0 - p));
}

CorrelationResult correlate(
    const std::vector<std::pair<double, double>>& entropy_dice_pairs,
    double clamp_eps) {
  const std::size_t n = entropy_dice_pairs.size();
  if (n < 3)
    throw ValidationError("correlate: need at least 3 records");

  CorrelationResult res;
  res.n = n;

  double mx = 0.0, my = 0.0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = entropy_dice_pairs[i].first;
    ys[i] = logit(entropy_dice_pairs[i].second, clamp_eps);
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    res.degenerate = true;
    return res;
  }
  res.r = sxy / std::sqrt(sxx * syy);
  res.r = std::clamp(res.r, -1.0, 1.0);
  res.slope = sxy / sxx;
  res.intercept = my - res.slope * mx;

  double df = double(n) - 2.0;
  double r2 = res.r * res.r;
  if (r2 >= 1.0) {
    res.p_value = 0.0;
  } else {
    double t = res.r * std::sqrt(df / (1.0 - r2));
    res.p_value = student_t_two_tailed(t, df);
  }
  return res;
}

OodDecision ood_flag(const SegmentUncertainty& u, double threshold) {
  return OodDecision{u.mean_entropy > threshold, u.mean_entropy};
}

}  // namespace segcal
