// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 4-9 share a single trained phantom benchmark.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "segcal/calibration.hpp"
#include "segcal/ensemble.hpp"
#include "segcal/model.hpp"
#include "segcal/rng.hpp"
#include "segcal/seg_metrics.hpp"
#include "segcal/segv_io.hpp"
#include "segcal/stats.hpp"
#include "segcal/synth.hpp"
#include "segcal/uncertainty.hpp"
#include "segcal/volume.hpp"
#include "test_util.hpp"

using namespace segcal;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, bool pass, const std::string& detail) {
  std::printf("CRITERION %2d: %s — %s\n", n, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) { return format_real(v); }

// ------------------------------------------------------------ criterion 1 ---

bool metric_oracles(std::string& detail) {
  auto rng = make_rng(0xACC1);
  std::uniform_int_distribution<std::size_t> dim(2, 7);
  std::uniform_int_distribution<int> kd(2, 4);
  double worst = 0.0;
  auto track = [&](double got, double want, double tol) {
    double err = std::abs(got - want);
    worst = std::max(worst, err);
    return err <= tol;
  };

  for (int t = 0; t < 100; ++t) {
    std::array<std::size_t, 3> dims{dim(rng), dim(rng), dim(rng)};
    int K = kd(rng);
    auto p = testutil::random_probs(rng, dims, K, t % 3 != 0);
    auto y = testutil::random_labels(rng, dims, K);
    if (!track(nll(p, y), testutil::oracle_nll(p, y), 1e-9)) {
      detail = "nll oracle mismatch at instance " + std::to_string(t);
      return false;
    }
    if (!track(brier(p, y), testutil::oracle_brier(p, y), 1e-9)) {
      detail = "brier oracle mismatch at instance " + std::to_string(t);
      return false;
    }
  }

  // ece over synthetic sample sets
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<double, bool>> s;
    int n = 50 + t * 7;
    for (int i = 0; i < n; ++i) {
      double c = u(rng);
      s.push_back({c, u(rng) < c});
    }
    int bins = 1 + t % 15;
    if (!track(reliability_from_samples(s, bins).ece,
               testutil::oracle_ece(s, bins), 1e-12)) {
      detail = "ece oracle mismatch at instance " + std::to_string(t);
      return false;
    }
  }

  // dice + hd95 on random masks
  int done = 0;
  while (done < 100) {
    std::array<std::size_t, 3> dims{dim(rng) + 3, dim(rng) + 3, dim(rng)};
    auto a = testutil::random_labels(rng, dims, 2);
    auto b = testutil::random_labels(rng, dims, 2);
    std::uniform_real_distribution<double> sp(0.4, 2.5);
    a.meta.spacing = b.meta.spacing = {sp(rng), sp(rng), sp(rng)};
    auto d = dice_coefficient(a, b, 1);
    auto h = hausdorff95(a, b, 1);
    if (!d.has_value() || !h.has_value()) continue;
    if (!track(*d, testutil::oracle_dice(a, b, 1), 1e-12)) {
      detail = "dice oracle mismatch";
      return false;
    }
    if (!track(*h, testutil::oracle_hd95(a, b, 1), 1e-9)) {
      detail = "hd95 oracle mismatch";
      return false;
    }
    ++done;
  }

  // mean segment entropy over fixed masks
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 16 + t;
    ProbabilityVolume p;
    p.meta.dims = {n, 1, 1};
    p.classes = 2;
    p.normalized = false;
    p.probs.resize(n * 2);
    std::vector<double> qs;
    for (std::size_t i = 0; i < n; ++i) {
      double q = u(rng);
      p.voxel(i)[0] = float(1.0 - q);
      p.voxel(i)[1] = float(q);
      qs.push_back(double(p.voxel(i)[1]));
    }
    VoxelMask all{p.meta, std::vector<std::uint8_t>(n, 1)};
    auto got = mean_entropy_over_mask(p, 1, all);
    if (!got ||
        !track(got->mean_entropy, testutil::oracle_binary_entropy_mean(qs),
               1e-12)) {
      detail = "entropy oracle mismatch at instance " + std::to_string(t);
      return false;
    }
  }

  // pearson r on noisy linear data
  std::normal_distribution<double> g(0.0, 0.1);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<double, double>> recs;
    std::vector<double> xs, ys;
    for (int i = 0; i < 20 + t % 30; ++i) {
      double e = u(rng) * 0.6;
      double dice = std::clamp(0.9 - 0.8 * e + g(rng), 0.02, 0.98);
      recs.push_back({e, dice});
      xs.push_back(e);
      ys.push_back(logit(dice));
    }
    auto got = correlate(recs);
    auto want = testutil::oracle_pearson(xs, ys);
    if (!track(got.r, want.r, 1e-9)) {
      detail = "pearson oracle mismatch at instance " + std::to_string(t);
      return false;
    }
  }

  // bootstrap CI against the shared-index re-implementation
  for (int t = 0; t < 100; ++t) {
    std::vector<double> values(10 + t % 40);
    for (auto& v : values) v = g(rng) * 10.0;
    BootstrapConfig cfg;
    cfg.seed = 0xB0 + t;
    auto got = bootstrap_ci(values, Stat::Mean, cfg);
    std::sort(values.begin(), values.end());
    std::vector<double> stats;
    for (int r = 0; r < cfg.resamples; ++r) {
      auto rr = make_rng(cfg.seed, {std::uint64_t(r)});
      std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      double s = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rr)];
      stats.push_back(s / double(values.size()));
    }
    std::sort(stats.begin(), stats.end());
    auto q = [&](double qq) {
      double r = qq * double(stats.size() - 1);
      std::size_t lo = std::size_t(r);
      return stats[lo] + (r - double(lo)) * (stats[std::min(lo + 1, stats.size() - 1)] - stats[lo]);
    };
    if (!track(got.lo, q(0.025), 1e-12) || !track(got.hi, q(0.975), 1e-12)) {
      detail = "bootstrap oracle mismatch at instance " + std::to_string(t);
      return false;
    }
  }

  detail = "8 metrics x 100 seeded instances, worst abs err " + fmt(worst);
  return true;
}

// ------------------------------------------------------------ criterion 2 ---

bool gradient_checks(std::string& detail) {
  auto rng = make_rng(0xACC2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    LossConfig loss;
    Head head;
    if (t % 2 == 0) {
      loss.kind = LossKind::CrossEntropy;
      head = Head::Softmax;
      loss.class_weights = {0.8, 1.2};
    } else {
      loss.kind = LossKind::Dice;
      head = Head::Sigmoid;
      loss.epsilon = 1.0;
      loss.class_weights = {1.0, 1.0};
    }
    auto m = init_model(1, 2, head, 0.0, 0xACC2 + t);
    FeatureVolume x;
    x.meta.dims = {4, 4, 1};
    x.channels = 1;
    x.data.resize(16);
    for (auto& v : x.data) v = u(rng);
    auto y = testutil::random_labels(rng, {4, 4, 1}, 2);

    auto drop = make_rng(0);
    auto pg = loss_and_param_grad(m, x, y, loss, false, drop);
    auto params = m.flatten();
    const double h = 1e-4;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto pp = params;
      pp[i] += h;
      ToyModel mp = m;
      mp.unflatten(pp);
      double lp = loss_and_param_grad(mp, x, y, loss, false, drop).loss;
      pp[i] -= 2 * h;
      mp.unflatten(pp);
      double lm = loss_and_param_grad(mp, x, y, loss, false, drop).loss;
      double fd = (lp - lm) / (2 * h);
      double rel = std::abs(fd - pg.grad[i]) /
                   std::max({std::abs(fd), std::abs(pg.grad[i]), 1e-2});
      worst = std::max(worst, rel);
    }
  }
  detail = "10 seeded models, both losses, max relative error " + fmt(worst);
  return worst < 1e-4;
}

// ------------------------------------------------------------ criterion 3 ---

bool calibration_sanity(std::string& detail) {
  auto rng = make_rng(0xACC3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, bool>> cal, skew;
  cal.reserve(1000000);
  skew.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) {
    double c = u(rng);
    bool ok = u(rng) < c;
    cal.push_back({c, ok});
    skew.push_back({c * c, ok});
  }
  double ece_cal = reliability_from_samples(cal, 10).ece;
  double ece_skew = reliability_from_samples(skew, 10).ece;
  detail = "calibrated ece " + fmt(100 * ece_cal) + "%, gamma-2 skew ece " +
           fmt(100 * ece_skew) + "%";
  return ece_cal < 0.01 && ece_skew > ece_cal;
}

// ------------------------------------------- shared benchmark, criteria 4-9 --

struct Benchmark {
  Dataset train_set, val_set, test_set;
  std::vector<TrainResult> dsc, ce, dsc_dropout;
  // member predictions on the test set, [member][case]
  std::vector<std::vector<ProbabilityVolume>> dsc_preds, ce_preds;
};

TrainConfig benchmark_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.batch_size = 1;
  cfg.epochs = 250;
  cfg.early_stop_patience = 100;
  cfg.plateau_patience = 25;
  cfg.seed = seed;
  return cfg;
}

LossConfig dsc_loss_config() {
  LossConfig loss;
  loss.kind = LossKind::Dice;
  loss.class_weights = {1.0, 1.0};
  loss.epsilon = 1.0;
  return loss;
}

Benchmark build_benchmark() {
  Benchmark b;
  auto all = generate(preset_config("medium", 11), 60);
  b.train_set.assign(all.begin(), all.begin() + 50);
  b.val_set.assign(all.begin() + 50, all.end());
  b.test_set = generate(preset_config("medium", 12), 50);

  LossConfig ce;
  ce.kind = LossKind::CrossEntropy;
  std::vector<const LabelVolume*> labs;
  for (const auto& [f, l] : all) labs.push_back(&l);
  ce.class_weights = inverse_frequency_weights(labs, 2);
  ce.weight_mode = WeightMode::InverseFrequency;

  b.dsc = train_ensemble(10, b.train_set, b.val_set, dsc_loss_config(),
                         benchmark_train_config(21));
  b.ce = train_ensemble(10, b.train_set, b.val_set, ce,
                        benchmark_train_config(22));
  b.dsc_dropout = train_ensemble(4, b.train_set, b.val_set, dsc_loss_config(),
                                 benchmark_train_config(66), 0.5);

  auto predict_all = [&](const std::vector<TrainResult>& members) {
    std::vector<std::vector<ProbabilityVolume>> out(members.size());
    for (std::size_t m = 0; m < members.size(); ++m)
      for (const auto& [x, y] : b.test_set)
        out[m].push_back(forward(members[m].model, x));
    return out;
  };
  b.dsc_preds = predict_all(b.dsc);
  b.ce_preds = predict_all(b.ce);
  return b;
}

std::vector<double> per_case_nll(
    const std::vector<ProbabilityVolume>& preds, const Dataset& cases) {
  std::vector<double> out;
  for (std::size_t c = 0; c < cases.size(); ++c)
    out.push_back(nll(preds[c], cases[c].second));
  return out;
}

std::vector<double> per_case_dice(
    const std::vector<ProbabilityVolume>& preds, const Dataset& cases) {
  std::vector<double> out;
  for (std::size_t c = 0; c < cases.size(); ++c)
    out.push_back(
        mean_foreground_dice(argmax_labels(preds[c]), cases[c].second));
  return out;
}

// per-case metric of the mean-over-members prediction, averaged over
// `repeats` random subsets of size M (substream policy mirrors m_sweep)
std::vector<double> subset_mean_metric(
    const std::vector<std::vector<ProbabilityVolume>>& preds,
    const Dataset& cases, int M, int repeats, std::uint64_t seed, bool dice) {
  std::vector<double> acc(cases.size(), 0.0);
  for (int r = 0; r < repeats; ++r) {
    auto subset = sample_subset(int(preds.size()), M,
                                substream(seed, {std::uint64_t(M), std::uint64_t(r)}));
    for (std::size_t c = 0; c < cases.size(); ++c) {
      std::vector<ProbabilityVolume> sel;
      for (int idx : subset) sel.push_back(preds[idx][c]);
      auto pe = ensemble_mean(sel);
      acc[c] += dice ? mean_foreground_dice(argmax_labels(pe), cases[c].second)
                     : nll(pe, cases[c].second);
    }
  }
  for (auto& v : acc) v /= double(repeats);
  return acc;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

// averages the per-case metric over single members, keeping the case axis
std::vector<double> single_model_mean(
    const std::vector<std::vector<ProbabilityVolume>>& preds,
    const Dataset& cases, bool dice) {
  std::vector<double> acc(cases.size(), 0.0);
  for (const auto& member : preds) {
    auto vals = dice ? per_case_dice(member, cases) : per_case_nll(member, cases);
    for (std::size_t c = 0; c < cases.size(); ++c) acc[c] += vals[c];
  }
  for (auto& v : acc) v /= double(preds.size());
  return acc;
}

bool claim_dice_miscalibrates(const Benchmark& b, std::string& detail) {
  auto dsc = single_model_mean(b.dsc_preds, b.test_set, false);
  auto ce = single_model_mean(b.ce_preds, b.test_set, false);
  BootstrapConfig cfg;
  cfg.resamples = 1000;
  cfg.seed = 0xACC4;
  auto test = paired_difference_test(dsc, ce, cfg);
  detail = "single-model NLL: DSC " + fmt(mean_of(dsc)) + " vs CE " +
           fmt(mean_of(ce)) + ", paired p " + fmt(test.p_value);
  return mean_of(dsc) > mean_of(ce) && test.p_value < 0.01;
}

bool claim_ensembling_calibrates(const Benchmark& b, std::string& detail) {
  const std::vector<int> sizes{1, 2, 5, 10};
  std::vector<std::vector<double>> per_m;
  for (int M : sizes)
    per_m.push_back(
        subset_mean_metric(b.dsc_preds, b.test_set, M, 10, 0xACC5, false));

  BootstrapConfig cfg;
  cfg.resamples = 1000;
  cfg.seed = 0xACC5;
  bool monotone = true;
  double worst_p = 0.0;
  for (std::size_t i = 0; i + 1 < per_m.size(); ++i) {
    auto test = paired_difference_test(per_m[i], per_m[i + 1], cfg);
    worst_p = std::max(worst_p, test.p_value);
    if (!(mean_of(per_m[i + 1]) < mean_of(per_m[i]) && test.p_value < 0.05))
      monotone = false;
  }
  double m1 = mean_of(per_m[0]), m5 = mean_of(per_m[2]);
  double drop = 1.0 - m5 / m1;
  detail = "DSC NLL " + fmt(m1) + " -> " + fmt(mean_of(per_m[1])) + " -> " +
           fmt(m5) + " -> " + fmt(mean_of(per_m[3])) + " over M 1,2,5,10; M5 drop " +
           fmt(100 * drop) + "%, worst adjacent-pair p " + fmt(worst_p);
  return drop >= 0.30 && monotone;
}

bool claim_ensembling_improves_dice(const Benchmark& b, std::string& detail) {
  BootstrapConfig cfg;
  cfg.resamples = 1000;
  cfg.seed = 0xACC6;

  bool both_no_worse = true, one_strict = false;
  std::string parts;
  for (const auto* preds : {&b.dsc_preds, &b.ce_preds}) {
    auto single = single_model_mean(*preds, b.test_set, true);
    std::vector<double> ens;
    {
      std::vector<ProbabilityVolume> sel;
      for (std::size_t c = 0; c < b.test_set.size(); ++c) {
        sel.clear();
        for (const auto& member : *preds) sel.push_back(member[c]);
        ens.push_back(mean_foreground_dice(argmax_labels(ensemble_mean(sel)),
                                           b.test_set[c].second));
      }
    }
    auto test = paired_difference_test(ens, single, cfg);
    bool improves = mean_of(ens) >= mean_of(single);
    bool strict = mean_of(ens) > mean_of(single) && test.p_value < 0.05;
    both_no_worse = both_no_worse && improves;
    one_strict = one_strict || strict;
    parts += std::string(preds == &b.dsc_preds ? "DSC " : "; CE ") +
             fmt(mean_of(single)) + " -> " + fmt(mean_of(ens)) + " (p " +
             fmt(test.p_value) + ")";
  }
  detail = "M=10 ensemble Dice vs single: " + parts;
  return both_no_worse && one_strict;
}

bool claim_entropy_predicts_quality(const Benchmark& b, std::string& detail) {
  Dataset mixed;
  const std::pair<const char*, std::uint64_t> parts_cfg[] = {
      {"easy", 41}, {"hard", 42}, {"shifted", 43}};
  for (const auto& [name, seed] : parts_cfg) {
    auto part = generate(preset_config(name, seed), 20);
    for (auto& c : part) mixed.push_back(std::move(c));
  }

  std::vector<std::pair<double, double>> recs;
  for (const auto& [x, y] : mixed) {
    std::vector<ProbabilityVolume> sel;
    for (const auto& member : b.dsc) sel.push_back(forward(member.model, x));
    auto pe = ensemble_mean(sel);
    auto u = mean_segment_entropy(pe, 1);
    auto d = dice_coefficient(argmax_labels(pe), y, 1);
    if (u && d) recs.push_back({u->mean_entropy, *d});
  }
  if (recs.size() < 55) {
    detail = "too many undefined segments: " + std::to_string(recs.size());
    return false;
  }
  auto corr = correlate(recs);
  detail = "n " + std::to_string(corr.n) + ", r " + fmt(corr.r) + ", p " +
           fmt(corr.p_value);
  return corr.r < 0.0 && std::abs(corr.r) >= 0.5 && corr.p_value < 0.01;
}

bool claim_ood_separation(const Benchmark& b, std::string& detail) {
  auto ood_set = generate(preset_config("shifted", 44), 50);
  auto score = [&](const Dataset& cases) {
    std::vector<double> out;
    for (const auto& [x, y] : cases) {
      std::vector<ProbabilityVolume> sel;
      for (const auto& member : b.dsc) sel.push_back(forward(member.model, x));
      auto u = mean_segment_entropy(ensemble_mean(sel), 1);
      out.push_back(u ? u->mean_entropy : std::log(2.0));
    }
    return out;
  };
  auto id_scores = score(b.test_set);
  auto ood_scores = score(ood_set);
  double a = auroc(id_scores, ood_scores);
  detail = "entropy AUROC " + fmt(a) + " (mean ID " + fmt(mean_of(id_scores)) +
           ", shifted " + fmt(mean_of(ood_scores)) + ")";
  return a > 0.8;
}

bool claim_mc_dropout(const Benchmark& b, std::string& detail) {
  const ToyModel& model = b.dsc_dropout[0].model;
  std::vector<double> mcdo_nll, single_nll;
  bool deterministic = true;
  for (const auto& [x, y] : b.test_set) {
    auto a = mc_dropout_mean(model, x, 50, 0xACC9);
    auto bb = mc_dropout_mean(model, x, 50, 0xACC9);
    deterministic = deterministic && a.probs == bb.probs;
    mcdo_nll.push_back(nll(a, y));
    single_nll.push_back(nll(forward(model, x), y));
  }
  detail = "T=50 bit-identical: " + std::string(deterministic ? "yes" : "no") +
           "; NLL mcdo " + fmt(mean_of(mcdo_nll)) + " vs single " +
           fmt(mean_of(single_nll));
  return deterministic && mean_of(mcdo_nll) <= mean_of(single_nll);
}

// ------------------------------------------------------------ criterion 10 --

bool format_fuzz(std::string& detail) {
  auto rng = make_rng(0xACCA);
  auto dir = fs::temp_directory_path() / "segcal_acceptance_fuzz";
  fs::create_directories(dir);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  std::uniform_int_distribution<int> kd(2, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  int rejected = 0, accepted = 0;
  for (int t = 0; t < 1000; ++t) {
    std::string bytes;
    bool is_model = t % 4 == 3;
    auto path = dir / (is_model ? "fuzz.toym" : "fuzz.segv");
    if (is_model) {
      auto m = init_model(1 + t % 2, kd(rng), t % 2 ? Head::Sigmoid : Head::Softmax,
                          0.25 * (t % 3), 0xF000 + t);
      save_model(m, path);
      bytes = testutil::slurp(path);
    } else {
      std::array<std::size_t, 3> dims{dim(rng), dim(rng), dim(rng)};
      int K = kd(rng);
      if (t % 2 == 0)
        bytes = serialize_volume(testutil::random_probs(rng, dims, K, t % 8 < 4));
      else
        bytes = serialize_volume(testutil::random_labels(rng, dims, K));
    }

    // half the files are corrupted
    if (t % 2 == 1) {
      switch (t % 10) {
        case 1:  // truncate
          bytes.resize(std::size_t(u(rng) * double(bytes.size())));
          break;
        case 3:  // trailing garbage
          bytes += "extra";
          break;
        case 5: {  // single byte flip
          std::size_t i = std::size_t(u(rng) * double(bytes.size()));
          bytes[i] = char(bytes[i] ^ (1 << (t % 8)));
          break;
        }
        case 7: {  // random byte overwrite
          std::size_t i = std::size_t(u(rng) * double(bytes.size()));
          bytes[i] = char(std::uint8_t(u(rng) * 256.0));
          break;
        }
        default:  // zero a span
          if (!bytes.empty()) {
            std::size_t i = std::size_t(u(rng) * double(bytes.size()));
            std::size_t len = std::min<std::size_t>(4, bytes.size() - i);
            for (std::size_t j = 0; j < len; ++j) bytes[i + j] = 0;
          }
          break;
      }
    }
    testutil::spew(path, bytes);

    try {
      std::string again;
      if (is_model) {
        auto m = load_model(path);
        auto path2 = dir / "resave.toym";
        save_model(m, path2);
        again = testutil::slurp(path2);
      } else {
        auto v = read_volume(path);
        again = std::visit([](const auto& vol) { return serialize_volume(vol); }, v);
      }
      if (again != bytes) {
        detail = "silent acceptance without bit-exact round-trip at file " +
                 std::to_string(t);
        return false;
      }
      ++accepted;
    } catch (const FormatError& e) {
      if (e.byte_offset() < 0) {
        detail = "unlocated format error at file " + std::to_string(t) + ": " +
                 e.what();
        return false;
      }
      ++rejected;
    } catch (const std::exception&) {
      if (!is_model) {
        detail = "volume reader threw a non-FormatError at file " +
                 std::to_string(t);
        return false;
      }
      ++rejected;  // TOYM1 reports std::runtime_error with a description
    }
  }
  detail = std::to_string(accepted) + " round-tripped bit-exactly, " +
           std::to_string(rejected) + " rejected with located errors";
  return accepted + rejected == 1000 && accepted > 300 && rejected > 100;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  std::string detail;

  bool ok = metric_oracles(detail);
  report(1, ok, detail);
  report(2, gradient_checks(detail), detail);
  report(3, calibration_sanity(detail), detail);

  std::printf("-- training shared benchmark (medium preset, 50/10/50 cases, "
              "10 members per loss + 4 dropout members)...\n");
  std::fflush(stdout);
  Benchmark b = build_benchmark();

  report(4, claim_dice_miscalibrates(b, detail), detail);
  report(5, claim_ensembling_calibrates(b, detail), detail);
  report(6, claim_ensembling_improves_dice(b, detail), detail);
  report(7, claim_entropy_predicts_quality(b, detail), detail);
  report(8, claim_ood_separation(b, detail), detail);
  report(9, claim_mc_dropout(b, detail), detail);
  report(10, format_fuzz(detail), detail);

  auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(clock::now() - t0);
  std::printf("%d/10 criteria passed in %llds\n", 10 - g_failures,
              (long long)secs.count());
  return g_failures == 0 ? 0 : 1;
}
