#include "segcal/volume.hpp"

#include <limits>
#include <numeric>

namespace segcal {

void GridMeta::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1)
      throw ValidationError("grid dims must all be >= 1");
    if (!(spacing[a] > 0.0))
      throw ValidationError("grid spacing must be strictly positive");
  }
  // Guard nx*ny*nz against overflow of size_t.
  std::size_t n = dims[0];
  if (dims[1] != 0 && n > std::numeric_limits<std::size_t>::max() / dims[1])
    throw ValidationError("voxel count overflows addressable size");
  n *= dims[1];
  if (dims[2] != 0 && n > std::numeric_limits<std::size_t>::max() / dims[2])
    throw ValidationError("voxel count overflows addressable size");
}

void LabelVolume::validate() const {
  meta.validate();
  if (classes < 2) throw ValidationError("label volume needs K >= 2");
  if (labels.size() != meta.voxel_count())
    throw ValidationError("label array length " + std::to_string(labels.size()) +
                          " does not match voxel count " +
                          std::to_string(meta.voxel_count()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes)
      throw ValidationError("label " + std::to_string(int(labels[i])) +
                                " >= K=" + std::to_string(classes) +
                                " at voxel " + std::to_string(i),
                            static_cast<long long>(i));
  }
}

void ProbabilityVolume::validate() const {
  meta.validate();
  if (classes < 1) throw ValidationError("probability volume needs K >= 1");
  const std::size_t expect = meta.voxel_count() * std::size_t(classes);
  if (probs.size() != expect)
    throw ValidationError("probability array length " +
                          std::to_string(probs.size()) +
                          " does not match voxel count * K = " +
                          std::to_string(expect));
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const float v = probs[i];
    if (!(v >= 0.0f && v <= 1.0f))
      throw ValidationError("probability " + std::to_string(v) +
                                " outside [0,1] at element " + std::to_string(i),
                            static_cast<long long>(i) * 4);
  }
  if (normalized) {
    for (std::size_t i = 0; i < meta.voxel_count(); ++i) {
      double s = 0.0;
      const float* v = voxel(i);
      for (int k = 0; k < classes; ++k) s += v[k];
      if (std::abs(s - 1.0) > 1e-5)
        throw ValidationError("normalized volume has channel sum " +
                                  std::to_string(s) + " at voxel " +
                                  std::to_string(i),
                              static_cast<long long>(i) * classes * 4);
    }
  }
}

void VoxelMask::validate() const {
  meta.validate();
  if (mask.size() != meta.voxel_count())
    throw ValidationError("mask length does not match voxel count");
}

std::size_t VoxelMask::count() const {
  return std::accumulate(mask.begin(), mask.end(), std::size_t{0},
                         [](std::size_t a, std::uint8_t b) {
                           return a + (b != 0);
                         });
}

LabelVolume argmax_labels(const ProbabilityVolume& p) {
  if (p.classes < 2)
    throw ValidationError("argmax needs K >= 2");
  LabelVolume out;
  out.meta = p.meta;
  out.classes = p.classes;
  out.labels.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const float* v = p.voxel(i);
    int best = 0;
    for (int k = 1; k < p.classes; ++k)
      if (v[k] > v[best]) best = k;  // strict: ties keep the lowest index
    out.labels[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

void require_same_meta(const GridMeta& a, const GridMeta& b,
                       const std::string& context) {
  if (!(a == b))
    throw ValidationError(context + ": grid meta mismatch");
}

}  // namespace segcal
