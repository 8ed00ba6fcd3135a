#ifndef SEGCAL_VOLUME_HPP
#define SEGCAL_VOLUME_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace segcal {

// Error raised when a volume fails validation. `byte_offset` points at the
// offending location when the volume came from a file, -1 otherwise.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg, long long byte_offset = -1)
      : std::runtime_error(msg), byte_offset_(byte_offset) {}
  long long byte_offset() const { return byte_offset_; }

 private:
  long long byte_offset_;
};

// Voxel grid geometry: counts per axis and physical spacing in millimeters.
struct GridMeta {
  std::array<std::size_t, 3> dims{1, 1, 1};   // nx, ny, nz
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // sx, sy, sz (mm)

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }

  void validate() const;

  bool operator==(const GridMeta&) const = default;
};

// Linear index for C-order storage, z slowest.
inline std::size_t voxel_index(const GridMeta& m, std::size_t x, std::size_t y,
                               std::size_t z) {
  return (z * m.dims[1] + y) * m.dims[0] + x;
}

// Hard class labels on a voxel grid.
struct LabelVolume {
  GridMeta meta;
  int classes = 2;  // K
  std::vector<std::uint8_t> labels;  // [z][y][x]

  void validate() const;

  bool operator==(const LabelVolume&) const = default;
};

// Per-class probabilities on a voxel grid, channel fastest.
// Sigmoid-head outputs need not sum to one per voxel; such volumes carry
// normalized = false.
struct ProbabilityVolume {
  GridMeta meta;
  int classes = 2;  // K
  bool normalized = true;
  std::vector<float> probs;  // [z][y][x][k]

  std::size_t size() const { return meta.voxel_count(); }
  const float* voxel(std::size_t i) const { return probs.data() + i * classes; }
  float* voxel(std::size_t i) { return probs.data() + i * classes; }

  void validate() const;

  bool operator==(const ProbabilityVolume&) const = default;
};

// Boolean region on a voxel grid.
struct VoxelMask {
  GridMeta meta;
  std::vector<std::uint8_t> mask;

  void validate() const;
  std::size_t count() const;

  bool operator==(const VoxelMask&) const = default;
};

// Per-voxel argmax with ties broken toward the lowest class index.
LabelVolume argmax_labels(const ProbabilityVolume& p);

void require_same_meta(const GridMeta& a, const GridMeta& b,
                       const std::string& context);

}  // namespace segcal

#endif
