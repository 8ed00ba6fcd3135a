#ifndef SEGCAL_SEG_METRICS_HPP
#define SEGCAL_SEG_METRICS_HPP

#include <optional>

#include "segcal/volume.hpp"

namespace segcal {

// Per-class segmentation quality. `dice` is empty when both segments are
// empty; `hd95_mm` is empty when either segment is empty.
struct SegmentScore {
  int class_id = 1;
  std::optional<double> dice;
  std::optional<double> hd95_mm;
};

// 2|A∩B| / (|A|+|B|) over voxel sets of class k. Empty/empty -> nullopt,
// excluded from averages upstream.
std::optional<double> dice_coefficient(const LabelVolume& pred,
                                       const LabelVolume& truth, int k);

// 95th percentile (linear interpolation between closest ranks) of the pooled
// directed voxel-center distances between the class-k segments, in mm.
// Computed with an exact Euclidean distance transform. Either segment empty
// -> nullopt.
std::optional<double> hausdorff95(const LabelVolume& pred,
                                  const LabelVolume& truth, int k);

SegmentScore segment_score(const LabelVolume& pred, const LabelVolume& truth,
                           int k);

// Axis-aligned bounding box of the class-k segment, grown by
// ceil(inplane_mm / spacing) voxels in ±x and ±y and `slices` slices in ±z,
// clipped to the grid.
VoxelMask dilated_bounding_box(const LabelVolume& truth, int k,
                               double inplane_mm = 8.0, int slices = 2);

// Union of dilated boxes over every foreground class present in `truth`.
VoxelMask union_foreground_box(const LabelVolume& truth, double inplane_mm = 8.0,
                               int slices = 2);

// Exact per-voxel Euclidean distances (mm) to the nearest set voxel of the
// mask, via separable squared-distance transforms. Exposed for reuse by the
// metric and its tests.
std::vector<double> distance_transform_mm(const VoxelMask& m);

}  // namespace segcal

#endif
