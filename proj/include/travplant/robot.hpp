#ifndef TRAVPLANT_ROBOT_HPP
#define TRAVPLANT_ROBOT_HPP

#include "travplant/geometry.hpp"

namespace travplant {

/// Rectangular robot envelope in the robot frame:
/// x in [-L/2, L/2], y in [-W/2, W/2], z in [0, H].
struct RobotFootprint {
  double length = 0.6;
  double width = 0.4;
  double height = 1.0;

  bool isValid() const { return length > 0 && width > 0 && height > 0; }
};

/// Camera placement on the robot body.
struct CameraMount {
  double forward = 0.3;  // m ahead of the robot origin
  double height = 0.8;   // m above the robot origin
  double pitch = 0.35;   // rad, positive tilts the optical axis toward the ground

  /// Camera-to-robot transform (optical frame: x right, y down, z forward).
  Pose cameraToRobot() const {
    // Optical axes expressed in the robot frame (x forward, y left, z up) before pitching.
    Mat3 optical;
    optical.col(0) = Vec3(0, -1, 0);
    optical.col(1) = Vec3(0, 0, -1);
    optical.col(2) = Vec3(1, 0, 0);
    const Mat3 tilt = Eigen::AngleAxisd(pitch, Vec3::UnitY()).toRotationMatrix();
    Pose p;
    p.rotation = tilt * optical;
    p.translation = Vec3(forward, 0, height);
    return p;
  }
};

inline Pose cameraPose(const Pose& robot_pose, const CameraMount& mount) {
  return robot_pose * mount.cameraToRobot();
}

}  // namespace travplant

#endif  // TRAVPLANT_ROBOT_HPP
