#include "segcal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "segcal/rng.hpp"

namespace segcal {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  double r = q * double(values.size() - 1);
  std::size_t lo = std::size_t(std::floor(r));
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = r - double(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

namespace {

double eval_stat(const std::vector<double>& v, Stat stat) {
  if (stat == Stat::Mean) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  }
  return quantile(v, 0.5);
}

}  // namespace

CiResult bootstrap_ci(const std::vector<double>& values, Stat stat,
                      const BootstrapConfig& cfg) {
  if (values.empty())
    throw std::invalid_argument("bootstrap_ci: empty input");
  if (cfg.resamples < 1)
    throw std::invalid_argument("bootstrap_ci: resamples must be >= 1");

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());

  CiResult res;
  res.point = eval_stat(sorted, stat);

  std::vector<double> stats(cfg.resamples);
  std::vector<double> sample(sorted.size());
  for (int r = 0; r < cfg.resamples; ++r) {
    auto rng = make_rng(cfg.seed, {std::uint64_t(r)});
    std::uniform_int_distribution<std::size_t> pick(0, sorted.size() - 1);
    for (auto& s : sample) s = sorted[pick(rng)];
    stats[r] = eval_stat(sample, stat);
  }
  double tail = (1.0 - cfg.ci_level) / 2.0;
  res.lo = quantile(stats, tail);
  res.hi = quantile(stats, 1.0 - tail);
  return res;
}

PairedTestResult paired_difference_test(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        const BootstrapConfig& cfg) {
  if (a.size() != b.size())
    throw std::invalid_argument("paired_difference_test: length mismatch");
  if (a.size() < 2)
    throw std::invalid_argument("paired_difference_test: need >= 2 pairs");

  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  std::sort(diff.begin(), diff.end());

  PairedTestResult res;
  for (double d : diff) res.mean_difference += d;
  res.mean_difference /= double(diff.size());

  int n_le = 0, n_ge = 0;
  std::vector<double> sample(diff.size());
  for (int r = 0; r < cfg.resamples; ++r) {
    auto rng = make_rng(cfg.seed, {std::uint64_t(r)});
    std::uniform_int_distribution<std::size_t> pick(0, diff.size() - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) s += diff[pick(rng)];
    double m = s / double(diff.size());
    if (m <= 0.0) ++n_le;
    if (m >= 0.0) ++n_ge;
  }
  const double n = double(cfg.resamples);
  double p = 2.0 * std::min((n_le + 1.0) / (n + 1.0), (n_ge + 1.0) / (n + 1.0));
  res.p_value = std::min(p, 1.0);
  res.significant = res.p_value < cfg.alpha;
  return res;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t_two_tailed: df <= 0");
  double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

double auroc(const std::vector<double>& negatives,
             const std::vector<double>& positives) {
  if (negatives.empty() || positives.empty())
    throw std::invalid_argument("auroc: empty class");
  double wins = 0.0;
  for (double p : positives)
    for (double n : negatives) {
      if (p > n)
        wins += 1.0;
      else if (p == n)
        wins += 0.5;
    }
  return wins / (double(positives.size()) * double(negatives.size()));
}

}  // namespace segcal
