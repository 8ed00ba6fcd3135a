#include "segcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "segcal/rng.hpp"

namespace segcal {

namespace {

struct Ellipse {
  double cx, cy, ax, ay;  // center and semi-axes in voxel units
  bool contains(double x, double y) const {
    double dx = (x - cx) / ax, dy = (y - cy) / ay;
    return dx * dx + dy * dy <= 1.0;
  }
};

Ellipse random_ellipse(std::mt19937_64& rng, std::size_t nx, std::size_t ny) {
  const double span = double(std::min(nx, ny));
  if (span < 8.0)
    throw std::invalid_argument("phantom grid too small for shapes");
  std::uniform_real_distribution<double> ax_d(0.12 * span, 0.25 * span);
  Ellipse e;
  e.ax = ax_d(rng);
  e.ay = ax_d(rng);
  std::uniform_real_distribution<double> cx_d(e.ax + 1.0, nx - e.ax - 1.0);
  std::uniform_real_distribution<double> cy_d(e.ay + 1.0, ny - e.ay - 1.0);
  e.cx = cx_d(rng);
  e.cy = cy_d(rng);
  return e;
}

void paint_labels(const PhantomConfig& cfg, std::mt19937_64& rng,
                  LabelVolume& lab) {
  const auto [nx, ny, nz] = cfg.meta.dims;
  for (std::size_t z = 0; z < nz; ++z) {
    switch (cfg.family) {
      case ShapeFamily::Blobs: {
        // one ellipse per foreground class; later classes overwrite overlap
        for (int k = 1; k < cfg.classes; ++k) {
          auto e = random_ellipse(rng, nx, ny);
          for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x)
              if (e.contains(double(x), double(y)))
                lab.labels[voxel_index(cfg.meta, x, y, z)] = std::uint8_t(k);
        }
        break;
      }
      case ShapeFamily::Rings: {
        for (int k = 1; k < cfg.classes; ++k) {
          auto e = random_ellipse(rng, nx, ny);
          for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x) {
              double dx = (x - e.cx) / e.ax, dy = (y - e.cy) / e.ay;
              double r2 = dx * dx + dy * dy;
              if (r2 <= 1.0 && r2 >= 0.35)
                lab.labels[voxel_index(cfg.meta, x, y, z)] = std::uint8_t(k);
            }
        }
        break;
      }
      case ShapeFamily::Nested: {
        // concentric ellipses sharing a center: class 1 outermost
        auto e = random_ellipse(rng, nx, ny);
        for (int k = 1; k < cfg.classes; ++k) {
          double shrink = 1.0 - double(k - 1) / double(cfg.classes);
          Ellipse ek{e.cx, e.cy, e.ax * shrink, e.ay * shrink};
          for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x)
              if (ek.contains(double(x), double(y)))
                lab.labels[voxel_index(cfg.meta, x, y, z)] = std::uint8_t(k);
        }
        break;
      }
    }
  }
}

}  // namespace

FeatureVolume apply_shift(const FeatureVolume& vol, const ShiftConfig& shift) {
  FeatureVolume out = vol;
  for (auto& v : out.data) v += shift.intensity_bias;

  if (shift.blur_radius > 0) {
    const auto [nx, ny, nz] = vol.meta.dims;
    const int C = vol.channels;
    const int R = shift.blur_radius;
    FeatureVolume blurred = out;
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x)
          for (int c = 0; c < C; ++c) {
            double sum = 0.0;
            int n = 0;
            for (int dy = -R; dy <= R; ++dy)
              for (int dx = -R; dx <= R; ++dx) {
                long long xx = (long long)x + dx, yy = (long long)y + dy;
                if (xx < 0 || yy < 0 || xx >= (long long)nx ||
                    yy >= (long long)ny)
                  continue;
                sum += out.data[voxel_index(vol.meta, xx, yy, z) * C + c];
                ++n;
              }
            blurred.data[voxel_index(vol.meta, x, y, z) * C + c] = sum / n;
          }
    out = std::move(blurred);
  }

  for (auto& v : out.data) {
    v = 0.5 + (v - 0.5) * shift.contrast_mult;
    v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

Dataset generate(const PhantomConfig& cfg, int count) {
  if (!(cfg.contrast > 0.0) || cfg.noise_sigma < 0.0)
    throw std::invalid_argument("generate: bad contrast/noise settings");
  cfg.meta.validate();

  Dataset out;
  out.reserve(count);
  const auto n = cfg.meta.voxel_count();
  const double scale = double(cfg.classes) * cfg.contrast;

  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(cfg.seed, {0xF00Du, std::uint64_t(i)});

    LabelVolume lab;
    lab.meta = cfg.meta;
    lab.classes = cfg.classes;
    lab.labels.assign(n, 0);
    paint_labels(cfg, rng, lab);

    FeatureVolume feat;
    feat.meta = cfg.meta;
    feat.channels = cfg.in_channels;
    feat.data.resize(n * cfg.in_channels);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (std::size_t v = 0; v < n; ++v) {
      // class mean intensities at (k + 0.5) * contrast, rescaled into [0,1]
      const double mean = (double(lab.labels[v]) + 0.5) * cfg.contrast;
      for (int c = 0; c < cfg.in_channels; ++c) {
        double raw = mean + (cfg.noise_sigma > 0.0 ? noise(rng) : 0.0);
        feat.data[v * cfg.in_channels + c] = std::clamp(raw / scale, 0.0, 1.0);
      }
    }
    if (!cfg.shift.is_identity()) feat = apply_shift(feat, cfg.shift);
    out.emplace_back(std::move(feat), std::move(lab));
  }
  return out;
}

PhantomConfig preset_config(const std::string& name, std::uint64_t seed) {
  PhantomConfig cfg;
  cfg.seed = seed;
  // Frozen benchmark presets; changing these invalidates recorded results.
  if (name == "easy") {
    cfg.noise_sigma = 0.30;
  } else if (name == "medium") {
    cfg.noise_sigma = 1.00;
  } else if (name == "hard") {
    cfg.noise_sigma = 1.80;
  } else if (name == "shifted") {
    cfg.noise_sigma = 1.00;
    cfg.shift = ShiftConfig{0.12, 1, 0.6};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return cfg;
}

bool is_known_preset(const std::string& name) {
  return name == "easy" || name == "medium" || name == "hard" ||
         name == "shifted";
}

}  // namespace segcal
