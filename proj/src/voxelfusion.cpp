#include "travplant/voxelfusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace travplant {

Eigen::MatrixXd floorAndNormalizeRows(Eigen::MatrixXd counts, double floor) {
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const double total = counts.row(r).sum();
    if (total > 0) counts.row(r) /= total;
    counts.row(r) = counts.row(r).cwiseMax(floor);
    counts.row(r) /= counts.row(r).sum();
  }
  return counts;
}

ClassLikelihood calibrateClassLikelihood(std::span<const LabelImage> predicted, std::span<const LabelImage> reference) {
  if (predicted.size() != reference.size()) throw InvalidInput("calibrateClassLikelihood: image count mismatch");
  Eigen::Matrix3d counts = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].rows() != reference[i].rows() || predicted[i].cols() != reference[i].cols())
      throw InvalidInput("calibrateClassLikelihood: shape mismatch");
    for (Eigen::Index p = 0; p < reference[i].size(); ++p) {
      const int l = reference[i].data()[p];
      const int z = predicted[i].data()[p];
      if (l >= kNumClasses || z >= kNumClasses) continue;
      counts(l, z) += 1;
    }
  }
  for (int l = 0; l < kNumClasses; ++l)
    if (counts.row(l).sum() == 0)
      throw InvalidInput("calibrateClassLikelihood: reference class " + std::to_string(l) + " never occurs");
  return {floorAndNormalizeRows(counts)};
}

int travBin(double value, int bins) {
  const int b = static_cast<int>(std::floor(value * bins));
  return std::clamp(b, 0, bins - 1);
}

TravLikelihood calibrateTravLikelihood(std::span<const ScalarImage> predicted, std::span<const MaskImage> masks,
                                       int bins) {
  if (bins < 1) throw InvalidInput("calibrateTravLikelihood: bins must be >= 1");
  if (predicted.size() != masks.size()) throw InvalidInput("calibrateTravLikelihood: image count mismatch");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(2, bins);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].rows() != masks[i].rows() || predicted[i].cols() != masks[i].cols())
      throw InvalidInput("calibrateTravLikelihood: shape mismatch");
    for (Eigen::Index p = 0; p < masks[i].size(); ++p)
      counts(masks[i].data()[p] ? 1 : 0, travBin(predicted[i].data()[p], bins)) += 1;
  }
  if (counts.row(0).sum() == 0 || counts.row(1).sum() == 0)
    throw InvalidInput("calibrateTravLikelihood: both mask values are required");
  return {floorAndNormalizeRows(counts)};
}

ClassPosterior bayesClassUpdate(const ClassPosterior& prior, int observed_class, const ClassLikelihood& lik) {
  if (observed_class < 0 || observed_class >= kNumClasses) throw InvalidInput("bayesClassUpdate: invalid class");
  const ClassPosterior unnorm = lik.table.col(observed_class).cwiseProduct(prior);
  return unnorm / unnorm.sum();
}

double bayesTravUpdate(double prior, int bin, const TravLikelihood& lik) {
  if (bin < 0 || bin >= lik.bins()) throw InvalidInput("bayesTravUpdate: invalid bin");
  const double pos = lik.table(1, bin) * prior;
  const double neg = lik.table(0, bin) * (1.0 - prior);
  return pos / (pos + neg);
}

void FusionParams::validate() const {
  if (!(voxel_size > 0)) throw InvalidInput("fusion: voxel size must be positive");
  if (eviction_frames < 1) throw InvalidInput("fusion: eviction limit must be >= 1");
  if (!(max_range > 0)) throw InvalidInput("fusion: max range must be positive");
  if (std::abs(class_prior.sum() - 1.0) > 1e-9 || class_prior.minCoeff() < 0)
    throw InvalidInput("fusion: class prior must lie on the simplex");
  if (trav_prior < 0 || trav_prior > 1) throw InvalidInput("fusion: traversability prior must lie in [0,1]");
}

SemanticVoxelMap::SemanticVoxelMap(FusionParams params) : params_(std::move(params)) { params_.validate(); }

void SemanticVoxelMap::setLikelihoods(ClassLikelihood cls, TravLikelihood trav) {
  if (trav.table.rows() != 2 || trav.bins() < 1) throw InvalidInput("traversability likelihood must be 2 x B");
  class_lik_ = std::move(cls);
  trav_lik_ = std::move(trav);
}

const ClassLikelihood& SemanticVoxelMap::classLikelihood() const {
  if (!class_lik_) throw InvalidInput("voxel map is not calibrated");
  return *class_lik_;
}

const TravLikelihood& SemanticVoxelMap::travLikelihood() const {
  if (!trav_lik_) throw InvalidInput("voxel map is not calibrated");
  return *trav_lik_;
}

const VoxelState* SemanticVoxelMap::find(const VoxelKey& key) const {
  const auto it = voxels_.find(key);
  return it == voxels_.end() ? nullptr : &it->second;
}

bool SemanticVoxelMap::inFrustum(const Vec3& center, const Pose& camera_pose, const CameraIntrinsics& intr) const {
  return inCameraFrustum(camera_pose.inverse() * center, intr);
}

bool SemanticVoxelMap::inCameraFrustum(const Vec3& c, const CameraIntrinsics& intr) const {
  return c.z() > 0 && c.z() <= params_.max_range && project(c, intr).has_value();
}

namespace {

struct Bucket {
  std::array<int, kNumClasses> class_hist{};
  double trav_sum = 0;
  Vec3 point_sum = Vec3::Zero();
  long count = 0;
};

}  // namespace

FrameReport SemanticVoxelMap::integrateFrame(const Frame& frame, const FramePrediction& prediction) {
  if (!calibrated()) throw InvalidInput("integrateFrame: likelihoods are not installed");
  const int H = frame.height();
  const int W = frame.width();
  if (prediction.class_argmax.rows() != H || prediction.class_argmax.cols() != W ||
      prediction.traversability.rows() != H || prediction.traversability.cols() != W)
    throw InvalidInput("integrateFrame: prediction shape mismatch");

  std::map<VoxelKey, Bucket> buckets;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const double z = frame.depth(v, u);
      if (!(z > 0)) continue;
      const Vec3 p = frame.pose * backprojectPixelCenter(u, v, z, frame.intr);
      Bucket& b = buckets[voxelKeyOf(p, params_.voxel_size)];
      const int cls = prediction.class_argmax(v, u);
      if (cls < kNumClasses) ++b.class_hist[static_cast<std::size_t>(cls)];
      b.trav_sum += prediction.traversability(v, u);
      b.point_sum += p;
      ++b.count;
    }

  FrameReport report;
  report.frame_id = frame.frame_id;
  for (const auto& [key, b] : buckets) {
    auto [it, inserted] = voxels_.try_emplace(key);
    VoxelState& s = it->second;
    if (inserted) {
      s.class_posterior = params_.class_prior;
      s.trav_posterior = params_.trav_prior;
      ++report.created;
    }
    const auto best = std::max_element(b.class_hist.begin(), b.class_hist.end());
    if (*best > 0) s.class_posterior = bayesClassUpdate(s.class_posterior, static_cast<int>(best - b.class_hist.begin()), *class_lik_);
    const double mean_trav = b.trav_sum / static_cast<double>(b.count);
    s.trav_posterior = bayesTravUpdate(s.trav_posterior, travBin(mean_trav, trav_lik_->bins()), *trav_lik_);
    s.point_sum += b.point_sum;
    s.count += b.count;
    s.miss_count = 0;
    s.last_frame = frame.frame_id;
  }
  report.touched = buckets.size();

  const Pose to_camera = frame.pose.inverse();
  for (auto it = voxels_.begin(); it != voxels_.end();) {
    if (buckets.count(it->first) == 0 &&
        inCameraFrustum(to_camera * voxelCenter(it->first, params_.voxel_size), frame.intr)) {
      if (++it->second.miss_count >= params_.eviction_frames) {
        it = voxels_.erase(it);
        ++report.evicted;
        continue;
      }
    }
    ++it;
  }
  report.live = voxels_.size();
  return report;
}

bool SemanticVoxelMap::isFree(const VoxelState& v) const {
  return v.mapClass() == static_cast<int>(SemanticClass::Plant) && v.trav_posterior > params_.free_threshold;
}

std::vector<VoxelKey> SemanticVoxelMap::sortedKeys() const {
  std::vector<VoxelKey> keys;
  keys.reserve(voxels_.size());
  for (const auto& kv : voxels_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<Vec3> SemanticVoxelMap::obstacleCloud(FreeSpaceRule rule) const {
  std::vector<Vec3> cloud;
  for (const auto& key : sortedKeys()) {
    const VoxelState& v = voxels_.at(key);
    if (rule == FreeSpaceRule::TraversablePlant && isFree(v)) continue;
    cloud.push_back(v.centroid());
  }
  return cloud;
}

}  // namespace travplant
