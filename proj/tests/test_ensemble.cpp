#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "segcal/calibration.hpp"
#include "segcal/ensemble.hpp"
#include "segcal/rng.hpp"
#include "segcal/synth.hpp"
#include "test_util.hpp"

using namespace segcal;

TEST_SUITE("ensemble") {

TEST_CASE("mean of identical members equals the member") {
  auto rng = make_rng(1001);
  auto v = testutil::random_probs(rng, {4, 4, 1}, 3);
  CHECK(ensemble_mean({v, v, v}) == v);
  CHECK(ensemble_mean({v}) == v);
}

TEST_CASE("two one-hot members average to the midpoint") {
  ProbabilityVolume a, b;
  a.meta.dims = b.meta.dims = {1, 1, 1};
  a.classes = b.classes = 2;
  a.probs = {1.0f, 0.0f};
  b.probs = {0.0f, 1.0f};
  auto m = ensemble_mean({a, b});
  CHECK(m.probs[0] == doctest::Approx(0.5));
  CHECK(m.probs[1] == doctest::Approx(0.5));
}

TEST_CASE("mean matches the extended-precision oracle") {
  auto rng = make_rng(1002);
  std::vector<ProbabilityVolume> members;
  for (int i = 0; i < 5; ++i)
    members.push_back(testutil::random_probs(rng, {4, 4, 1}, 3, i % 2 == 0));
  auto got = ensemble_mean(members);
  for (std::size_t i = 0; i < got.probs.size(); ++i) {
    long double s = 0.0L;
    for (const auto& m : members) s += m.probs[i];
    CHECK(double(got.probs[i]) == doctest::Approx(double(s / 5.0L)).epsilon(1e-7));
  }
  // normalized only when every member is normalized
  CHECK(!got.normalized);
  CHECK(ensemble_mean({members[0], members[2]}).normalized);
}

TEST_CASE("mean is permutation invariant and idempotent on duplicates") {
  auto rng = make_rng(1003);
  std::vector<ProbabilityVolume> members;
  for (int i = 0; i < 4; ++i)
    members.push_back(testutil::random_probs(rng, {3, 3, 1}, 2));
  auto fwd = ensemble_mean(members);
  std::reverse(members.begin(), members.end());
  CHECK(ensemble_mean(members) == fwd);
  CHECK(ensemble_mean({members[0], members[0]}) == members[0]);
}

TEST_CASE("mean channel sums equal the mean of member channel sums") {
  auto rng = make_rng(1004);
  std::vector<ProbabilityVolume> members;
  for (int i = 0; i < 3; ++i)
    members.push_back(testutil::random_probs(rng, {4, 2, 1}, 3, false));
  auto got = ensemble_mean(members);
  for (std::size_t i = 0; i < got.size(); ++i) {
    double want = 0.0;
    for (const auto& m : members)
      for (int k = 0; k < 3; ++k) want += m.voxel(i)[k];
    want /= 3.0;
    double have = 0.0;
    for (int k = 0; k < 3; ++k) have += got.voxel(i)[k];
    CHECK(have == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("mean rejects empty and mismatched member lists") {
  CHECK_THROWS_AS(ensemble_mean({}), ValidationError);
  auto rng = make_rng(1005);
  auto a = testutil::random_probs(rng, {2, 2, 1}, 2);
  auto b = testutil::random_probs(rng, {2, 1, 2}, 2);
  CHECK_THROWS_AS(ensemble_mean({a, b}), ValidationError);
}

TEST_CASE("mc dropout mean: zero dropout equals the deterministic pass") {
  auto m = init_model(1, 2, Head::Softmax, 0.0, 1100);
  PhantomConfig pc = preset_config("easy", 21);
  auto data = generate(pc, 1);
  for (int T : {1, 5})
    CHECK(mc_dropout_mean(m, data[0].first, T, 99) == forward(m, data[0].first));
}

TEST_CASE("mc dropout mean: T = 1 equals one stochastic pass on its substream") {
  auto m = init_model(1, 2, Head::Softmax, 0.5, 1101);
  PhantomConfig pc = preset_config("easy", 22);
  auto data = generate(pc, 1);
  auto one = mc_dropout_mean(m, data[0].first, 1, 7);
  auto rng = make_rng(7, {0x3CD0u, 0});
  auto direct = forward(m, data[0].first, true, rng);
  for (std::size_t i = 0; i < one.probs.size(); ++i)
    CHECK(one.probs[i] == doctest::Approx(double(direct.probs[i])).epsilon(1e-7));
  CHECK_THROWS_AS(mc_dropout_mean(m, data[0].first, 0, 7), ValidationError);
}

TEST_CASE("mc dropout mean is run-to-run bit identical") {
  auto m = init_model(1, 2, Head::Softmax, 0.5, 1102);
  PhantomConfig pc = preset_config("easy", 23);
  auto data = generate(pc, 1);
  auto a = mc_dropout_mean(m, data[0].first, 50, 12345);
  auto b = mc_dropout_mean(m, data[0].first, 50, 12345);
  CHECK(a.probs == b.probs);
  auto c = mc_dropout_mean(m, data[0].first, 50, 12346);
  CHECK(a.probs != c.probs);
}

TEST_CASE("sample_subset draws valid deterministic subsets") {
  for (int t = 0; t < 20; ++t) {
    auto s = sample_subset(10, 4, 5000 + t);
    CHECK(s.size() == 4);
    CHECK(std::is_sorted(s.begin(), s.end()));
    std::set<int> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 4);
    for (int v : s) {
      CHECK(v >= 0);
      CHECK(v < 10);
    }
    CHECK(sample_subset(10, 4, 5000 + t) == s);
  }
  CHECK(sample_subset(3, 3, 1) == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(sample_subset(3, 4, 1), ValidationError);
}

TEST_CASE("m_sweep degenerate cases") {
  auto rng = make_rng(1006);
  const int cases = 3, members = 4;
  std::vector<std::vector<ProbabilityVolume>> preds(members);
  std::vector<LabelVolume> truths;
  for (int c = 0; c < cases; ++c)
    truths.push_back(testutil::random_labels(rng, {4, 4, 1}, 2));
  auto shared = testutil::random_probs(rng, {4, 4, 1}, 2);
  for (int m = 0; m < members; ++m)
    for (int c = 0; c < cases; ++c) preds[m].push_back(shared);

  EnsembleConfig cfg;
  cfg.subsample_sizes = {1, 2, 4};
  cfg.repeats = 5;
  auto rows = m_sweep(preds, truths, {}, SweepMetric::Nll, SweepRegion::Whole,
                      cfg, 9);
  REQUIRE(rows.size() == 3);
  // identical members: metric constant across M
  CHECK(rows[0].mean == doctest::Approx(rows[1].mean).epsilon(1e-7));
  CHECK(rows[1].mean == doctest::Approx(rows[2].mean).epsilon(1e-7));
  // M = total: only one subset exists, zero CI width
  CHECK(rows[2].ci_lo == doctest::Approx(rows[2].mean));
  CHECK(rows[2].ci_hi == doctest::Approx(rows[2].mean));

  cfg.subsample_sizes = {5};
  CHECK_THROWS_AS(m_sweep(preds, truths, {}, SweepMetric::Nll,
                          SweepRegion::Whole, cfg, 9),
                  ValidationError);
}

TEST_CASE("sweep csv format") {
  std::vector<SweepRow> rows{
      {5, 10, SweepMetric::Nll, SweepRegion::Whole, 0.25, 0.2, 0.3}};
  CHECK(sweep_csv(rows) ==
        "M,repeat_count,metric,region,mean,ci_lo,ci_hi\n"
        "5,10,nll,whole,0.25,0.2,0.3\n");
}

TEST_CASE("ensembling noisy perturbations does not hurt calibration") {
  // members are independent noisy versions of one calibrated predictor;
  // sign test over 20 trials that the M=25 ensemble ece is <= the mean
  // member ece
  auto rng = make_rng(1007);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.08);
  const int N = 20000, M = 25;
  int wins = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> conf(N);
    std::vector<bool> outcome(N);
    for (int i = 0; i < N; ++i) {
      conf[i] = u(rng);
      outcome[i] = u(rng) < conf[i];
    }
    std::vector<std::vector<double>> member_conf(M, std::vector<double>(N));
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < N; ++i)
        member_conf[m][i] = std::clamp(conf[i] + g(rng), 0.0, 1.0);

    double mean_member_ece = 0.0;
    std::vector<std::pair<double, bool>> samples(N);
    for (int m = 0; m < M; ++m) {
      for (int i = 0; i < N; ++i) samples[i] = {member_conf[m][i], bool(outcome[i])};
      mean_member_ece += reliability_from_samples(samples, 10).ece / M;
    }
    for (int i = 0; i < N; ++i) {
      double s = 0.0;
      for (int m = 0; m < M; ++m) s += member_conf[m][i];
      samples[i] = {s / M, bool(outcome[i])};
    }
    double ens_ece = reliability_from_samples(samples, 10).ece;
    if (ens_ece <= mean_member_ece) ++wins;
  }
  // binomial(20, 1/2): P(wins >= 16) < 0.01
  CHECK(wins >= 16);
}

}  // TEST_SUITE
