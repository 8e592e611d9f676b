#ifndef TRAVPLANT_VOXELFUSION_HPP
#define TRAVPLANT_VOXELFUSION_HPP

#include "travplant/geometry.hpp"
#include "travplant/synthworld.hpp"
#include "travplant/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace travplant {

inline constexpr double kLikelihoodFloor = 1e-4;

using ClassPosterior = Eigen::Vector3d;

/// L(l, z) = P(observed class z | true class l); rows sum to one.
struct ClassLikelihood {
  Eigen::Matrix3d table = Eigen::Matrix3d::Identity();

  static ClassLikelihood Uniform() { return {Eigen::Matrix3d::Constant(1.0 / 3.0)}; }
};

/// T(tau, b) = P(observation bin b | tau); 2 x B, rows sum to one.
struct TravLikelihood {
  Eigen::MatrixXd table;

  int bins() const { return static_cast<int>(table.cols()); }
  static TravLikelihood Uniform(int bins) { return {Eigen::MatrixXd::Constant(2, bins, 1.0 / bins)}; }
};

/// Floors every entry at `floor` and renormalizes each row.
Eigen::MatrixXd floorAndNormalizeRows(Eigen::MatrixXd counts, double floor = kLikelihoodFloor);

ClassLikelihood calibrateClassLikelihood(std::span<const LabelImage> predicted, std::span<const LabelImage> reference);

/// Equal-width bins on [0, 1]; the value 1 falls in the last bin.
int travBin(double value, int bins);

TravLikelihood calibrateTravLikelihood(std::span<const ScalarImage> predicted, std::span<const MaskImage> masks,
                                       int bins);

ClassPosterior bayesClassUpdate(const ClassPosterior& prior, int observed_class, const ClassLikelihood& lik);
double bayesTravUpdate(double prior, int bin, const TravLikelihood& lik);

struct VoxelState {
  ClassPosterior class_posterior = ClassPosterior::Constant(1.0 / 3.0);
  double trav_posterior = 0.5;
  Vec3 point_sum = Vec3::Zero();
  long count = 0;
  int miss_count = 0;
  int last_frame = -1;

  Vec3 centroid() const { return point_sum / static_cast<double>(count); }
  int mapClass() const {
    Eigen::Index best = 0;
    class_posterior.maxCoeff(&best);
    return static_cast<int>(best);
  }
};

struct FusionParams {
  double voxel_size = 0.1;
  int eviction_frames = 10;
  double max_range = 5.0;
  ClassPosterior class_prior = ClassPosterior::Constant(1.0 / 3.0);
  double trav_prior = 0.5;
  double free_threshold = 0.75;

  void validate() const;
};

/// Per-pixel network output handed to the map.
struct FramePrediction {
  LabelImage class_argmax;
  ScalarImage traversability;
};

struct FrameReport {
  int frame_id = 0;
  std::size_t touched = 0;
  std::size_t created = 0;
  std::size_t evicted = 0;
  std::size_t live = 0;
};

enum class FreeSpaceRule {
  TraversablePlant,  // plant MAP class and q > threshold is free
  AllObstacles,      // every voxel is an obstacle
};

class SemanticVoxelMap {
 public:
  using Storage = std::unordered_map<VoxelKey, VoxelState, VoxelKeyHash>;

  explicit SemanticVoxelMap(FusionParams params = {});

  void setLikelihoods(ClassLikelihood cls, TravLikelihood trav);
  bool calibrated() const { return class_lik_.has_value() && trav_lik_.has_value(); }

  /// Buckets the frame's depth points by voxel, applies one class and one
  /// traversability update per touched voxel and ages untouched voxels that
  /// lie in the camera frustum.
  FrameReport integrateFrame(const Frame& frame, const FramePrediction& prediction);

  /// True when `center` projects into the image with depth in (0, max_range].
  bool inFrustum(const Vec3& center, const Pose& camera_pose, const CameraIntrinsics& intr) const;

  bool isFree(const VoxelState& v) const;

  /// Centroids of obstacle voxels, ordered by voxel key.
  std::vector<Vec3> obstacleCloud(FreeSpaceRule rule = FreeSpaceRule::TraversablePlant) const;

  const Storage& voxels() const { return voxels_; }
  const VoxelState* find(const VoxelKey& key) const;
  std::size_t size() const { return voxels_.size(); }
  const FusionParams& params() const { return params_; }
  const ClassLikelihood& classLikelihood() const;
  const TravLikelihood& travLikelihood() const;
  void clear() { voxels_.clear(); }

  /// Keys in lexicographic order.
  std::vector<VoxelKey> sortedKeys() const;

 private:
  bool inCameraFrustum(const Vec3& camera_point, const CameraIntrinsics& intr) const;

  FusionParams params_;
  std::optional<ClassLikelihood> class_lik_;
  std::optional<TravLikelihood> trav_lik_;
  Storage voxels_;
};

}  // namespace travplant

#endif  // TRAVPLANT_VOXELFUSION_HPP
