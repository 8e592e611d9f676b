#ifndef TRAVPLANT_SYNTHWORLD_HPP
#define TRAVPLANT_SYNTHWORLD_HPP

#include "travplant/geometry.hpp"
#include "travplant/robot.hpp"
#include "travplant/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace travplant {

/// Appearance kind of a surface; selects the feature mean.
enum class SurfaceKind : std::uint8_t { Stem = 0, Foliage = 1, Artificial = 2, Ground = 3 };

inline SemanticClass classOf(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::Stem:
    case SurfaceKind::Foliage: return SemanticClass::Plant;
    case SurfaceKind::Artificial: return SemanticClass::Artificial;
    case SurfaceKind::Ground: return SemanticClass::Ground;
  }
  return SemanticClass::Void;
}

inline bool isTraversable(SurfaceKind k) { return k == SurfaceKind::Foliage; }

struct ScenarioConfig {
  std::uint64_t seed = 1;

  // Layout. Rows run along +x from 0 to row_length at y = k * row_spacing;
  // corridor k lies between rows k and k + 1.
  int num_rows = 3;
  double row_length = 7.5;
  double row_spacing = 1.6;
  double path_width = 1.0;

  double stem_spacing = 0.3;
  double stem_radius = 0.06;
  double stem_height = 1.5;
  double stem_jitter = 0.05;

  int row_foliage_per_stem = 1;
  double row_foliage_min_radius = 0.12;
  double row_foliage_max_radius = 0.22;

  double overhang_fraction = 0.5;
  double overhang_segment = 0.6;
  double overhang_protrusion = 0.45;
  double overhang_center_height = 0.55;

  int artificial_per_row = 3;
  double wall_x = -1;  // rigid box across every corridor at this x; negative disables

  // Appearance.
  int feature_dim = 8;
  double feature_sigma = 1.0;
  double feature_separation = 2.0;  // |mu_foliage - mu_stem|
  double class_separation = 4.0;    // norm of each class mean offset

  // Sensor.
  CameraIntrinsics intrinsics;
  CameraMount mount;
  double min_range = 0.05;
  double max_range = 5.0;

  RobotFootprint robot;
  double ground_clearance = 0.1;  // robot origin height above ground
  double trajectory_spacing = 0.25;
};

/// Validates `cfg`; throws ConfigError on inconsistency.
void validate(const ScenarioConfig& cfg);

struct Cylinder {
  Eigen::Vector2d center;
  double radius;
  double height;
};

struct Sphere {
  Vec3 center;
  double radius;
};

struct Box {
  Vec3 min;
  Vec3 max;
};

struct Corridor {
  int id;
  double y_center;
  double x_start;
  double x_end;
  double half_width;
};

/// Per-kind class-conditional Gaussian feature model.
struct FeatureModel {
  Eigen::MatrixXd means;  // 4 x F, row = SurfaceKind
  double sigma = 1.0;

  int dim() const { return static_cast<int>(means.cols()); }
  Eigen::VectorXd mean(SurfaceKind k) const { return means.row(static_cast<int>(k)).transpose(); }
};

FeatureModel makeFeatureModel(int dim, double sigma, double feature_separation, double class_separation);

struct WorldModel {
  std::vector<Cylinder> stems;
  std::vector<Sphere> foliage;
  std::vector<Box> artificial;
  std::vector<Corridor> corridors;
  FeatureModel features;
  Vec3 bounds_min;
  Vec3 bounds_max;
  double min_range = 0.05;
  double max_range = 5.0;
  std::uint64_t seed = 0;

  const Corridor& corridor(int id) const;
};

WorldModel buildWorld(const ScenarioConfig& cfg);

struct RayHit {
  double t;
  SurfaceKind kind;
};

/// Nearest surface hit of `origin + t * dir` with t in (t_min, t_max].
std::optional<RayHit> castRay(const WorldModel& world, const Vec3& origin, const Vec3& dir, double t_min,
                              double t_max);

// Closed-form ray/primitive intersections. Each returns the smallest t > t_min.
std::optional<double> intersectGround(const Vec3& o, const Vec3& d, double t_min);
std::optional<double> intersectSphere(const Sphere& s, const Vec3& o, const Vec3& d, double t_min);
std::optional<double> intersectCylinder(const Cylinder& c, const Vec3& o, const Vec3& d, double t_min);
std::optional<double> intersectBox(const Box& b, const Vec3& o, const Vec3& d, double t_min);

struct Frame {
  int frame_id = 0;
  Pose pose;  // camera-to-world
  CameraIntrinsics intr;
  PixelMatrix<float> features;  // (H*W) x F
  DepthImage depth;             // 0 = no return
  LabelImage gt_class;
  MaskImage gt_trav;

  int height() const { return intr.height; }
  int width() const { return intr.width; }
  int pixelCount() const { return intr.width * intr.height; }
};

/// Ray-casts one observation. Depth is the hit distance along the optical axis.
Frame renderFrame(const WorldModel& world, const Pose& camera_pose, const CameraIntrinsics& intr,
                  std::mt19937_64& rng, int frame_id = 0);

struct PathSpec {
  int corridor_id = 0;
  double spacing = 0.25;
  std::optional<double> start_x;
  std::optional<double> end_x;
};

/// Robot poses along a corridor centerline facing +x, origin at `ground_clearance`.
std::vector<Pose> scriptTrajectory(const WorldModel& world, const PathSpec& spec, double ground_clearance = 0.1);

/// Fraction of corridor cross-sections (uniform grid of `samples` x positions)
/// where some foliage sphere intersects the robot-height corridor rectangle.
double corridorBlockedFraction(const WorldModel& world, int corridor_id, double robot_height, int samples = 1000);

}  // namespace travplant

#endif  // TRAVPLANT_SYNTHWORLD_HPP
