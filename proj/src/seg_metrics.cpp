#include "segcal/seg_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace segcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform (Felzenszwalb & Huttenlocher) over samples at
// physical positions i * spacing. f holds incoming squared distances; out
// receives the lower envelope values.
void dt1d(const std::vector<double>& f, double spacing,
          std::vector<double>& out) {
  const int n = int(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  auto pos = [spacing](int i) { return i * spacing; };
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s;
    while (true) {
      if (f[v[k]] == kInf) {
        // Parabola at v[k] is absent; drop it.
        if (k == 0) {
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          s = -kInf;
          break;
        }
        --k;
        continue;
      }
      s = ((f[q] + pos(q) * pos(q)) - (f[v[k]] + pos(v[k]) * pos(v[k]))) /
          (2 * pos(q) - 2 * pos(v[k]));
      if (s <= z[k]) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  out.resize(n);
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < pos(q)) ++k;
    if (f[v[k]] == kInf) {
      out[q] = kInf;
    } else {
      double d = pos(q) - pos(v[k]);
      out[q] = d * d + f[v[k]];
    }
  }
}

std::vector<std::size_t> class_voxels(const LabelVolume& v, int k) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.labels.size(); ++i)
    if (v.labels[i] == k) out.push_back(i);
  return out;
}

// Percentile with linear interpolation between closest ranks.
double percentile(std::vector<double> vals, double q) {
  std::sort(vals.begin(), vals.end());
  if (vals.size() == 1) return vals[0];
  double r = q * double(vals.size() - 1);
  std::size_t lo = std::size_t(std::floor(r));
  std::size_t hi = std::min(lo + 1, vals.size() - 1);
  double frac = r - double(lo);
  return vals[lo] * (1.0 - frac) + vals[hi] * frac;
}

}  // namespace

std::vector<double> distance_transform_mm(const VoxelMask& m) {
  const auto [nx, ny, nz] = m.meta.dims;
  const auto [sx, sy, sz] = m.meta.spacing;
  std::vector<double> d2(m.mask.size());
  for (std::size_t i = 0; i < m.mask.size(); ++i)
    d2[i] = m.mask[i] ? 0.0 : kInf;

  std::vector<double> line, out;
  // x pass
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t y = 0; y < ny; ++y) {
      line.resize(nx);
      for (std::size_t x = 0; x < nx; ++x) line[x] = d2[voxel_index(m.meta, x, y, z)];
      dt1d(line, sx, out);
      for (std::size_t x = 0; x < nx; ++x) d2[voxel_index(m.meta, x, y, z)] = out[x];
    }
  // y pass
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t x = 0; x < nx; ++x) {
      line.resize(ny);
      for (std::size_t y = 0; y < ny; ++y) line[y] = d2[voxel_index(m.meta, x, y, z)];
      dt1d(line, sy, out);
      for (std::size_t y = 0; y < ny; ++y) d2[voxel_index(m.meta, x, y, z)] = out[y];
    }
  // z pass
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t x = 0; x < nx; ++x) {
      line.resize(nz);
      for (std::size_t z = 0; z < nz; ++z) line[z] = d2[voxel_index(m.meta, x, y, z)];
      dt1d(line, sz, out);
      for (std::size_t z = 0; z < nz; ++z) d2[voxel_index(m.meta, x, y, z)] = out[z];
    }

  for (auto& v : d2) v = (v == kInf) ? kInf : std::sqrt(v);
  return d2;
}

std::optional<double> dice_coefficient(const LabelVolume& pred,
                                       const LabelVolume& truth, int k) {
  require_same_meta(pred.meta, truth.meta, "dice");
  std::size_t np = 0, nt = 0, inter = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    bool a = pred.labels[i] == k;
    bool b = truth.labels[i] == k;
    np += a;
    nt += b;
    inter += a && b;
  }
  if (np + nt == 0) return std::nullopt;
  return 2.0 * double(inter) / double(np + nt);
}

std::optional<double> hausdorff95(const LabelVolume& pred,
                                  const LabelVolume& truth, int k) {
  require_same_meta(pred.meta, truth.meta, "hausdorff95");
  auto pv = class_voxels(pred, k);
  auto tv = class_voxels(truth, k);
  if (pv.empty() || tv.empty()) return std::nullopt;

  auto make_mask = [&](const std::vector<std::size_t>& idx) {
    VoxelMask m;
    m.meta = pred.meta;
    m.mask.assign(pred.labels.size(), 0);
    for (auto i : idx) m.mask[i] = 1;
    return m;
  };
  auto dist_to_truth = distance_transform_mm(make_mask(tv));
  auto dist_to_pred = distance_transform_mm(make_mask(pv));

  std::vector<double> pooled;
  pooled.reserve(pv.size() + tv.size());
  for (auto i : pv) pooled.push_back(dist_to_truth[i]);
  for (auto i : tv) pooled.push_back(dist_to_pred[i]);
  return percentile(std::move(pooled), 0.95);
}

SegmentScore segment_score(const LabelVolume& pred, const LabelVolume& truth,
                           int k) {
  SegmentScore s;
  s.class_id = k;
  s.dice = dice_coefficient(pred, truth, k);
  s.hd95_mm = hausdorff95(pred, truth, k);
  return s;
}

VoxelMask dilated_bounding_box(const LabelVolume& truth, int k,
                               double inplane_mm, int slices) {
  auto idx = class_voxels(truth, k);
  if (idx.empty())
    throw ValidationError("dilated_bounding_box: empty segment for class " +
                          std::to_string(k));
  const auto& m = truth.meta;
  std::size_t lo[3] = {m.dims[0], m.dims[1], m.dims[2]};
  std::size_t hi[3] = {0, 0, 0};
  for (auto i : idx) {
    std::size_t x = i % m.dims[0];
    std::size_t y = (i / m.dims[0]) % m.dims[1];
    std::size_t z = i / (m.dims[0] * m.dims[1]);
    std::size_t c[3] = {x, y, z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  // ceil so the physical dilation is at least the requested millimeters
  long long grow[3] = {
      static_cast<long long>(std::ceil(inplane_mm / m.spacing[0])),
      static_cast<long long>(std::ceil(inplane_mm / m.spacing[1])), slices};
  std::size_t blo[3], bhi[3];
  for (int a = 0; a < 3; ++a) {
    long long l = static_cast<long long>(lo[a]) - grow[a];
    long long h = static_cast<long long>(hi[a]) + grow[a];
    blo[a] = static_cast<std::size_t>(std::max<long long>(l, 0));
    bhi[a] = static_cast<std::size_t>(
        std::min<long long>(h, static_cast<long long>(m.dims[a]) - 1));
  }
  VoxelMask out;
  out.meta = m;
  out.mask.assign(m.voxel_count(), 0);
  for (std::size_t z = blo[2]; z <= bhi[2]; ++z)
    for (std::size_t y = blo[1]; y <= bhi[1]; ++y)
      for (std::size_t x = blo[0]; x <= bhi[0]; ++x)
        out.mask[voxel_index(m, x, y, z)] = 1;
  return out;
}

VoxelMask union_foreground_box(const LabelVolume& truth, double inplane_mm,
                               int slices) {
  VoxelMask out;
  out.meta = truth.meta;
  out.mask.assign(truth.meta.voxel_count(), 0);
  bool any = false;
  for (int k = 1; k < truth.classes; ++k) {
    bool present = std::find(truth.labels.begin(), truth.labels.end(),
                             std::uint8_t(k)) != truth.labels.end();
    if (!present) continue;
    any = true;
    auto box = dilated_bounding_box(truth, k, inplane_mm, slices);
    for (std::size_t i = 0; i < out.mask.size(); ++i)
      out.mask[i] |= box.mask[i];
  }
  if (!any)
    throw ValidationError("union_foreground_box: all-background volume");
  return out;
}

}  // namespace segcal
