#include "travplant/travmask.hpp"

#include <algorithm>
#include <cmath>

namespace travplant {

std::vector<VoxelKey> TraversedVoxelSet::sortedKeys() const {
  std::vector<VoxelKey> out(keys.begin(), keys.end());
  std::sort(out.begin(), out.end());
  return out;
}

TraversedVoxelSet sweepTraversedVoxels(std::span<const Pose> trajectory, const RobotFootprint& fp, double voxel_size) {
  if (trajectory.empty()) throw InvalidInput("sweep: empty trajectory");
  if (!fp.isValid()) throw InvalidInput("sweep: footprint dimensions must be positive");
  if (!(voxel_size > 0)) throw InvalidInput("sweep: voxel size must be positive");

  const double hl = 0.5 * fp.length;
  const double hw = 0.5 * fp.width;
  TraversedVoxelSet out;
  out.voxel_size = voxel_size;

  for (const Pose& pose : trajectory) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (double x : {-hl, hl})
      for (double y : {-hw, hw})
        for (double z : {0.0, fp.height}) {
          const Vec3 c = pose * Vec3(x, y, z);
          lo = lo.cwiseMin(c);
          hi = hi.cwiseMax(c);
        }
    const VoxelKey kmin = voxelKeyOf(lo, voxel_size);
    const VoxelKey kmax = voxelKeyOf(hi, voxel_size);
    const Pose to_robot = pose.inverse();
    for (int ix = kmin.ix; ix <= kmax.ix; ++ix)
      for (int iy = kmin.iy; iy <= kmax.iy; ++iy)
        for (int iz = kmin.iz; iz <= kmax.iz; ++iz) {
          const VoxelKey key{ix, iy, iz};
          const Vec3 p = to_robot * voxelCenter(key, voxel_size);
          if (p.x() >= -hl && p.x() < hl && p.y() >= -hw && p.y() < hw && p.z() >= 0 && p.z() < fp.height)
            out.keys.insert(key);
        }
  }
  return out;
}

MaskImage renderTraversabilityMask(const Frame& frame, const TraversedVoxelSet& tv) {
  MaskImage mask = MaskImage::Zero(frame.height(), frame.width());
  if (tv.keys.empty()) return mask;
  for (int v = 0; v < frame.height(); ++v)
    for (int u = 0; u < frame.width(); ++u) {
      const double z = frame.depth(v, u);
      if (!(z > 0)) continue;
      const Vec3 world = frame.pose * backprojectPixelCenter(u, v, z, frame.intr);
      if (tv.contains(voxelKeyOf(world, tv.voxel_size))) mask(v, u) = 1;
    }
  return mask;
}

MaskDataset buildMaskDataset(std::span<const Frame> frames, std::span<const Pose> trajectory, const RobotFootprint& fp,
                             double voxel_size) {
  MaskDataset ds;
  ds.traversed = sweepTraversedVoxels(trajectory, fp, voxel_size);
  ds.masks.reserve(frames.size());
  for (const Frame& f : frames) {
    MaskImage m = renderTraversabilityMask(f, ds.traversed);
    ds.labeled_pixels += static_cast<std::size_t>((m != 0).count());
    ds.gt_traversable_pixels += static_cast<std::size_t>((f.gt_trav != 0).count());
    ds.masks.push_back(std::move(m));
  }
  return ds;
}

}  // namespace travplant
