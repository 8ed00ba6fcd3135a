#ifndef SEGCAL_SYNTH_HPP
#define SEGCAL_SYNTH_HPP

#include <string>

#include "segcal/model.hpp"
#include "segcal/volume.hpp"

namespace segcal {

enum class ShapeFamily { Blobs, Rings, Nested };

// Domain-shift descriptor: intensity bias, box blur, contrast multiplication
// about mid-gray, applied in that order and re-clipped to [0,1]. Defaults are
// the identity.
struct ShiftConfig {
  double intensity_bias = 0.0;
  int blur_radius = 0;
  double contrast_mult = 1.0;

  bool is_identity() const {
    return intensity_bias == 0.0 && blur_radius == 0 && contrast_mult == 1.0;
  }
};

struct PhantomConfig {
  GridMeta meta{{32, 32, 1}, {1.0, 1.0, 1.0}};
  int classes = 2;
  int in_channels = 1;
  ShapeFamily family = ShapeFamily::Blobs;
  double contrast = 1.0;     // separation of class mean intensities (raw units)
  double noise_sigma = 0.0;  // additive Gaussian noise, raw units
  ShiftConfig shift;
  std::uint64_t seed = 0;
};

// n i.i.d. phantoms; phantom i depends only on (cfg.seed, i), so prefixes of
// longer runs are stable. Labels are the exact generating masks; features are
// normalized to [0,1].
Dataset generate(const PhantomConfig& cfg, int count);

FeatureVolume apply_shift(const FeatureVolume& vol, const ShiftConfig& shift);

// Version-frozen benchmark presets: easy, medium, hard, shifted.
PhantomConfig preset_config(const std::string& name, std::uint64_t seed);
bool is_known_preset(const std::string& name);

}  // namespace segcal

#endif
