#include "segcal/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "segcal/calibration.hpp"
#include "segcal/rng.hpp"
#include "segcal/seg_metrics.hpp"
#include "segcal/stats.hpp"

namespace segcal {

ProbabilityVolume ensemble_mean(const std::vector<ProbabilityVolume>& members) {
  if (members.empty())
    throw ValidationError("ensemble_mean: empty member list");
  const auto& first = members[0];
  for (const auto& m : members) {
    require_same_meta(first.meta, m.meta, "ensemble_mean");
    if (m.classes != first.classes)
      throw ValidationError("ensemble_mean: class count mismatch");
  }
  std::vector<double> acc(first.probs.size(), 0.0);
  bool normalized = true;
  for (const auto& m : members) {
    normalized = normalized && m.normalized;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m.probs[i];
  }
  ProbabilityVolume out;
  out.meta = first.meta;
  out.classes = first.classes;
  out.normalized = normalized;
  out.probs.resize(acc.size());
  const double inv = 1.0 / double(members.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    out.probs[i] = std::clamp(float(acc[i] * inv), 0.0f, 1.0f);
  return out;
}

ProbabilityVolume mc_dropout_mean(const ToyModel& model, const FeatureVolume& x,
                                  int samples, std::uint64_t seed) {
  if (samples < 1)
    throw ValidationError("mc_dropout_mean: samples must be >= 1");
  std::vector<double> acc;
  ProbabilityVolume last;
  for (int t = 0; t < samples; ++t) {
    auto rng = make_rng(seed, {0x3CD0u, std::uint64_t(t)});
    last = forward(model, x, true, rng);
    if (acc.empty()) acc.assign(last.probs.size(), 0.0);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += last.probs[i];
  }
  ProbabilityVolume out = last;
  const double inv = 1.0 / double(samples);
  for (std::size_t i = 0; i < acc.size(); ++i)
    out.probs[i] = std::clamp(float(acc[i] * inv), 0.0f, 1.0f);
  return out;
}

const char* sweep_metric_name(SweepMetric m) {
  switch (m) {
    case SweepMetric::Nll: return "nll";
    case SweepMetric::Brier: return "brier";
    case SweepMetric::Ece: return "ece";
    case SweepMetric::Dice: return "dice";
  }
  return "?";
}

const char* sweep_region_name(SweepRegion r) {
  return r == SweepRegion::Whole ? "whole" : "box";
}

double evaluate_metric(SweepMetric metric, const ProbabilityVolume& pred,
                       const LabelVolume& truth, const VoxelMask* region,
                       int num_bins) {
  switch (metric) {
    case SweepMetric::Nll:
      return nll(pred, truth, region);
    case SweepMetric::Brier:
      return brier(pred, truth, region);
    case SweepMetric::Ece:
      return reliability(pred, truth, region, num_bins).ece;
    case SweepMetric::Dice: {
      LabelVolume hard = argmax_labels(pred);
      return mean_foreground_dice(hard, truth);
    }
  }
  throw ValidationError("evaluate_metric: unknown metric");
}

std::vector<int> sample_subset(int total, int m, std::uint64_t seed) {
  if (m > total)
    throw ValidationError("sample_subset: requested more members than exist");
  std::vector<int> pool(total);
  std::iota(pool.begin(), pool.end(), 0);
  auto rng = make_rng(seed);
  // partial Fisher-Yates
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<SweepRow> m_sweep(
    const std::vector<std::vector<ProbabilityVolume>>& member_preds,
    const std::vector<LabelVolume>& truths, const std::vector<VoxelMask>& masks,
    SweepMetric metric, SweepRegion region, const EnsembleConfig& cfg,
    std::uint64_t seed) {
  const int total = int(member_preds.size());
  if (total < 1) throw ValidationError("m_sweep: no members");
  if (cfg.repeats < 1) throw ValidationError("m_sweep: repeats must be >= 1");
  for (const auto& mp : member_preds)
    if (mp.size() != truths.size())
      throw ValidationError("m_sweep: member prediction count != case count");
  if (region == SweepRegion::Box && masks.size() != truths.size())
    throw ValidationError("m_sweep: box region needs one mask per case");

  std::vector<SweepRow> rows;
  for (int m : cfg.subsample_sizes) {
    if (m > total)
      throw ValidationError("m_sweep: subsample size " + std::to_string(m) +
                            " exceeds member count " + std::to_string(total));
    std::vector<double> repeat_means(cfg.repeats);
    for (int r = 0; r < cfg.repeats; ++r) {
      auto subset = sample_subset(
          total, m, substream(seed, {std::uint64_t(m), std::uint64_t(r)}));
      double sum = 0.0;
      for (std::size_t c = 0; c < truths.size(); ++c) {
        std::vector<ProbabilityVolume> sel;
        sel.reserve(subset.size());
        for (int idx : subset) sel.push_back(member_preds[idx][c]);
        auto pe = ensemble_mean(sel);
        const VoxelMask* mask =
            region == SweepRegion::Box ? &masks[c] : nullptr;
        sum += evaluate_metric(metric, pe, truths[c], mask);
      }
      repeat_means[r] = sum / double(truths.size());
    }
    BootstrapConfig bcfg;
    bcfg.seed = substream(seed, {std::uint64_t(m), 0xC1u});
    auto ci = bootstrap_ci(repeat_means, Stat::Mean, bcfg);
    rows.push_back(SweepRow{m, cfg.repeats, metric, region, ci.point, ci.lo,
                            ci.hi});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "M,repeat_count,metric,region,mean,ci_lo,ci_hi\n";
  for (const auto& r : rows)
    out << r.members << ',' << r.repeat_count << ','
        << sweep_metric_name(r.metric) << ',' << sweep_region_name(r.region)
        << ',' << format_real(r.mean) << ',' << format_real(r.ci_lo) << ','
        << format_real(r.ci_hi) << '\n';
  return out.str();
}

}  // namespace segcal
