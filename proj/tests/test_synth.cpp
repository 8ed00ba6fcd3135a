#include <cmath>

#include "doctest.h"
#include "segcal/rng.hpp"
#include "segcal/synth.hpp"
#include "test_util.hpp"

using namespace segcal;

TEST_SUITE("synth-data") {

TEST_CASE("generation is deterministic in the seed") {
  PhantomConfig cfg;
  cfg.seed = 99;
  cfg.noise_sigma = 0.4;
  auto a = generate(cfg, 5);
  auto b = generate(cfg, 5);
  REQUIRE(a.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second == b[i].second);
  }
  cfg.seed = 100;
  auto c = generate(cfg, 5);
  CHECK(a[0].first != c[0].first);
}

TEST_CASE("prefix stability: first n of a longer run match a shorter run") {
  PhantomConfig cfg;
  cfg.seed = 7;
  cfg.noise_sigma = 0.3;
  auto small = generate(cfg, 3);
  auto big = generate(cfg, 8);
  for (int i = 0; i < 3; ++i) {
    CHECK(small[i].first == big[i].first);
    CHECK(small[i].second == big[i].second);
  }
}

TEST_CASE("noiseless phantoms threshold back to their labels") {
  PhantomConfig cfg;
  cfg.seed = 13;
  cfg.noise_sigma = 0.0;
  auto data = generate(cfg, 10);
  for (const auto& [x, y] : data) {
    // K=2, contrast 1: means are 0.25 and 0.75 after [0,1] rescaling
    for (std::size_t i = 0; i < y.labels.size(); ++i) {
      int recovered = x.data[i] > 0.5 ? 1 : 0;
      CHECK(recovered == int(y.labels[i]));
    }
  }
}

TEST_CASE("labels are valid and every class appears across a batch") {
  PhantomConfig cfg;
  cfg.seed = 14;
  cfg.classes = 3;
  cfg.noise_sigma = 0.5;
  auto data = generate(cfg, 100);
  std::array<std::size_t, 3> counts{0, 0, 0};
  for (const auto& [x, y] : data) {
    CHECK_NOTHROW(y.validate());
    for (auto l : y.labels) {
      REQUIRE(l < 3);
      ++counts[l];
    }
    for (double v : x.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
  CHECK(counts[2] > 0);
}

TEST_CASE("foreground fraction stays near the configured geometry") {
  // default blobs preset; band frozen from the first measured run
  // (mean foreground fraction ~0.105 over 100 phantoms)
  PhantomConfig cfg;
  cfg.seed = 15;
  auto data = generate(cfg, 100);
  double frac = 0.0;
  for (const auto& [x, y] : data) {
    std::size_t fg = 0;
    for (auto l : y.labels) fg += l != 0;
    frac += double(fg) / double(y.labels.size());
  }
  frac /= 100.0;
  CHECK(frac > 0.084);   // 0.105 - 20%
  CHECK(frac < 0.126);   // 0.105 + 20%
}

TEST_CASE("identity shift is a no-op") {
  PhantomConfig cfg;
  cfg.seed = 16;
  cfg.noise_sigma = 0.2;
  auto data = generate(cfg, 1);
  ShiftConfig id;
  CHECK(id.is_identity());
  // generate() skips the shift entirely when it is the identity; the raw
  // transform only promises element-wise closeness (contrast map rounding)
  auto shifted = apply_shift(data[0].first, id);
  REQUIRE(shifted.data.size() == data[0].first.data.size());
  for (std::size_t i = 0; i < shifted.data.size(); ++i)
    CHECK(shifted.data[i] == doctest::Approx(data[0].first.data[i]).epsilon(1e-12));
}

TEST_CASE("bias shift is invertible on interior-valued voxels") {
  PhantomConfig cfg;
  cfg.seed = 17;
  cfg.noise_sigma = 0.2;
  auto x = generate(cfg, 1)[0].first;
  ShiftConfig plus{0.1, 0, 1.0}, minus{-0.1, 0, 1.0};
  auto back = apply_shift(apply_shift(x, plus), minus);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (x.data[i] < 0.05 || x.data[i] > 0.85) continue;  // clipping region
    CHECK(back.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("shift applies bias, blur, contrast in order with re-clipping") {
  FeatureVolume x;
  x.meta.dims = {3, 3, 1};
  x.channels = 1;
  x.data.assign(9, 0.5);
  x.data[4] = 0.9;

  // contrast-only: scale about mid-gray
  auto c = apply_shift(x, ShiftConfig{0.0, 0, 0.5});
  CHECK(c.data[4] == doctest::Approx(0.7));
  CHECK(c.data[0] == doctest::Approx(0.5));

  // bias-only with clipping
  auto b = apply_shift(x, ShiftConfig{0.2, 0, 1.0});
  CHECK(b.data[4] == doctest::Approx(1.0));  // 1.1 clipped
  CHECK(b.data[0] == doctest::Approx(0.7));

  // blur-only: mean over the in-bounds neighborhood (corner sees 4 voxels)
  auto bl = apply_shift(x, ShiftConfig{0.0, 1, 1.0});
  CHECK(bl.data[0] == doctest::Approx((0.9 + 3 * 0.5) / 4.0));
  CHECK(bl.data[4] == doctest::Approx((0.9 + 8 * 0.5) / 9.0));
}

TEST_CASE("presets are frozen and unknown names rejected") {
  for (const char* name : {"easy", "medium", "hard", "shifted"}) {
    CHECK(is_known_preset(name));
    auto cfg = preset_config(name, 1);
    CHECK(cfg.seed == 1);
    CHECK(cfg.classes == 2);
  }
  CHECK(preset_config("easy", 1).noise_sigma < preset_config("medium", 1).noise_sigma);
  CHECK(preset_config("medium", 1).noise_sigma < preset_config("hard", 1).noise_sigma);
  CHECK(!preset_config("shifted", 1).shift.is_identity());
  CHECK(preset_config("medium", 1).shift.is_identity());
  CHECK(!is_known_preset("impossible"));
  CHECK_THROWS(preset_config("impossible", 1));
}

TEST_CASE("invalid configs are rejected") {
  PhantomConfig cfg;
  cfg.contrast = 0.0;
  CHECK_THROWS(generate(cfg, 1));
  PhantomConfig small;
  small.meta.dims = {4, 4, 1};
  CHECK_THROWS(generate(small, 1));
}

}  // TEST_SUITE
