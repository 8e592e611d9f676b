#ifndef TRAVPLANT_GEOMETRY_HPP
#define TRAVPLANT_GEOMETRY_HPP

#include "travplant/types.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

namespace travplant {

/// Rigid transform x -> R x + t. Camera poses map camera frame (x right, y down,
/// z forward) to world; robot poses map robot frame (x forward, z up) to world.
template <typename Scalar>
struct Pose_ {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static Pose_ Identity() { return {}; }

  static Pose_ FromTranslation(const Vector3& t) {
    Pose_ p;
    p.translation = t;
    return p;
  }

  /// Rotation about world z by `yaw` radians, then translation.
  static Pose_ FromYaw(Scalar yaw, const Vector3& t = Vector3::Zero()) {
    Pose_ p;
    p.rotation = Eigen::AngleAxis<Scalar>(yaw, Vector3::UnitZ()).toRotationMatrix();
    p.translation = t;
    return p;
  }

  static Pose_ FromQuaternion(const Eigen::Quaternion<Scalar>& q, const Vector3& t) {
    Pose_ p;
    p.rotation = q.normalized().toRotationMatrix();
    p.translation = t;
    return p;
  }

  Eigen::Quaternion<Scalar> quaternion() const { return Eigen::Quaternion<Scalar>(rotation); }

  Pose_ inverse() const {
    Pose_ p;
    p.rotation = rotation.transpose();
    p.translation = -(p.rotation * translation);
    return p;
  }

  Vector3 operator*(const Vector3& x) const { return rotation * x + translation; }

  Pose_ operator*(const Pose_& other) const {
    Pose_ p;
    p.rotation = rotation * other.rotation;
    p.translation = rotation * other.translation + translation;
    return p;
  }

  /// Orthonormal with determinant +1.
  bool isValid(Scalar tol = Scalar(1e-9)) const {
    return (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - Scalar(1)) <= tol;
  }
};

using Pose = Pose_<double>;

struct CameraIntrinsics {
  double fx = 40.0;
  double fy = 40.0;
  double cx = 32.0;
  double cy = 24.0;
  int width = 64;
  int height = 48;

  bool isValid() const {
    return fx > 0 && fy > 0 && cx > 0 && cx < width && cy > 0 && cy < height;
  }
};

struct Pixel {
  double u = 0;
  double v = 0;
};

struct VoxelKey {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  std::int32_t iz = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    // Teschner et al. spatial hash primes.
    return static_cast<std::size_t>(static_cast<std::uint64_t>(k.ix) * 73856093ULL ^
                                    static_cast<std::uint64_t>(k.iy) * 19349663ULL ^
                                    static_cast<std::uint64_t>(k.iz) * 83492791ULL);
  }
};

template <typename Derived>
std::optional<Pixel> project(const Eigen::MatrixBase<Derived>& point, const CameraIntrinsics& intr) {
  const double z = point(2);
  if (!(z > 0)) return std::nullopt;
  const double u = intr.fx * point(0) / z + intr.cx;
  const double v = intr.fy * point(1) / z + intr.cy;
  if (u < 0 || v < 0 || u >= intr.width || v >= intr.height) return std::nullopt;
  return Pixel{u, v};
}

inline Vec3 backproject(const Pixel& px, double depth, const CameraIntrinsics& intr) {
  if (!(depth > 0)) throw InvalidInput("backproject: depth must be positive");
  return {(px.u - intr.cx) * depth / intr.fx, (px.v - intr.cy) * depth / intr.fy, depth};
}

/// Camera-frame point seen through the center of pixel (u, v).
inline Vec3 backprojectPixelCenter(int u, int v, double depth, const CameraIntrinsics& intr) {
  return backproject(Pixel{u + 0.5, v + 0.5}, depth, intr);
}

template <typename Scalar, typename Derived>
typename Pose_<Scalar>::Vector3 transformPoint(const Pose_<Scalar>& pose, const Eigen::MatrixBase<Derived>& p) {
  return pose.rotation * p + pose.translation;
}

template <typename Derived>
VoxelKey voxelKeyOf(const Eigen::MatrixBase<Derived>& p, double voxel_size) {
  return {static_cast<std::int32_t>(std::floor(p(0) / voxel_size)),
          static_cast<std::int32_t>(std::floor(p(1) / voxel_size)),
          static_cast<std::int32_t>(std::floor(p(2) / voxel_size))};
}

inline Vec3 voxelCenter(const VoxelKey& key, double voxel_size) {
  return {(key.ix + 0.5) * voxel_size, (key.iy + 0.5) * voxel_size, (key.iz + 0.5) * voxel_size};
}

}  // namespace travplant

#endif  // TRAVPLANT_GEOMETRY_HPP
