#ifndef TRAVPLANT_TRAVMASK_HPP
#define TRAVPLANT_TRAVMASK_HPP

#include "travplant/geometry.hpp"
#include "travplant/robot.hpp"
#include "travplant/synthworld.hpp"

#include <span>
#include <unordered_set>
#include <vector>

namespace travplant {

/// Voxels whose centers the robot envelope contained at some trajectory pose.
struct TraversedVoxelSet {
  std::unordered_set<VoxelKey, VoxelKeyHash> keys;
  double voxel_size = 0.1;

  bool contains(const VoxelKey& k) const { return keys.count(k) != 0; }
  std::size_t size() const { return keys.size(); }

  /// Keys in lexicographic order, for stable dumps.
  std::vector<VoxelKey> sortedKeys() const;
};

/// Union over robot poses of voxels whose center lies inside the footprint box.
TraversedVoxelSet sweepTraversedVoxels(std::span<const Pose> trajectory, const RobotFootprint& fp, double voxel_size);

/// mask(u,v) = 1 iff the pixel's depth point lands in a traversed voxel.
MaskImage renderTraversabilityMask(const Frame& frame, const TraversedVoxelSet& tv);

struct MaskDataset {
  std::vector<MaskImage> masks;
  TraversedVoxelSet traversed;
  std::size_t labeled_pixels = 0;
  std::size_t gt_traversable_pixels = 0;

  /// labeled / ground-truth-traversable; 0 when nothing is traversable.
  double coverage() const {
    return gt_traversable_pixels == 0 ? 0.0 : static_cast<double>(labeled_pixels) / gt_traversable_pixels;
  }
};

MaskDataset buildMaskDataset(std::span<const Frame> frames, std::span<const Pose> trajectory, const RobotFootprint& fp,
                             double voxel_size);

}  // namespace travplant

#endif  // TRAVPLANT_TRAVMASK_HPP
