#include "travplant/geometry.hpp"
#include "travplant/robot.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace travplant;

namespace {

CameraIntrinsics square100() {
  CameraIntrinsics in;
  in.fx = in.fy = 100;
  in.cx = in.cy = 50;
  in.width = in.height = 100;
  return in;
}

Pose randomPose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return Pose::FromQuaternion(q, Vec3(n(rng), n(rng), n(rng)));
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("project examples") {
    const auto in = square100();
    auto p = project(Vec3(0, 0, 1), in);
    REQUIRE(p);
    CHECK(p->u == doctest::Approx(50));
    CHECK(p->v == doctest::Approx(50));
    CHECK_FALSE(project(Vec3(0.5, 0, 1), in));
    p = project(Vec3(0.25, -0.1, 2), in);
    REQUIRE(p);
    CHECK(p->u == doctest::Approx(62.5).epsilon(1e-12));
    CHECK(p->v == doctest::Approx(45).epsilon(1e-12));
    CHECK_FALSE(project(Vec3(0, 0, -1), in));
    CHECK_FALSE(project(Vec3(0, 0, 0), in));
  }

  TEST_CASE("backproject examples") {
    const auto in = square100();
    Vec3 x = backproject({50, 50}, 2, in);
    CHECK((x - Vec3(0, 0, 2)).norm() < 1e-12);
    x = backproject({100, 50}, 1, in);
    CHECK((x - Vec3(0.5, 0, 1)).norm() < 1e-12);
    CHECK_THROWS_AS(backproject({10, 10}, 0, in), InvalidInput);
    CHECK_THROWS_AS(backproject({10, 10}, -1, in), InvalidInput);
  }

  TEST_CASE("project and backproject are inverse") {
    const auto in = square100();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uu(0, 99.999), depth(0.1, 20);
    for (int i = 0; i < 1000; ++i) {
      const Pixel px{uu(rng), uu(rng)};
      const Vec3 x = backproject(px, depth(rng), in);
      const auto back = project(x, in);
      REQUIRE(back);
      CHECK(std::abs(back->u - px.u) < 1e-6);
      CHECK(std::abs(back->v - px.v) < 1e-6);
      const Vec3 again = backproject(*back, x.z(), in);
      CHECK((again - x).norm() < 1e-6);
    }
  }

  TEST_CASE("transform point") {
    CHECK((transformPoint(Pose::Identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0);
    CHECK((transformPoint(Pose::FromTranslation(Vec3(0, 0, 5)), Vec3(1, 2, 3)) - Vec3(1, 2, 8)).norm() == 0);
    const Pose yaw = Pose::FromYaw(std::numbers::pi / 2);
    CHECK((yaw * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-9);
  }

  TEST_CASE("pose inverse, validity and associativity") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      const Pose a = randomPose(rng), b = randomPose(rng), c = randomPose(rng);
      CHECK(a.isValid());
      const Pose id = a * a.inverse();
      CHECK((id.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(id.translation.norm() < 1e-9);
      const Pose l = (a * b) * c, r = a * (b * c);
      CHECK((l.rotation - r.rotation).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((l.translation - r.translation).norm() < 1e-9);
    }
    Pose bad;
    bad.rotation(0, 0) = -1;
    CHECK_FALSE(bad.isValid());
  }

  TEST_CASE("voxel key floor semantics") {
    CHECK(voxelKeyOf(Vec3(0.05, 0.05, 0.05), 0.1) == VoxelKey{0, 0, 0});
    CHECK(voxelKeyOf(Vec3(-0.05, 0.05, 0.25), 0.1) == VoxelKey{-1, 0, 2});
    CHECK(voxelKeyOf(Vec3(0.1, 0.1, 0.1), 0.1) == VoxelKey{1, 1, 1});
  }

  TEST_CASE("voxel center examples and roundtrip") {
    CHECK((voxelCenter({0, 0, 0}, 0.1) - Vec3(0.05, 0.05, 0.05)).norm() < 1e-12);
    CHECK((voxelCenter({-1, 0, 2}, 0.1) - Vec3(-0.05, 0.05, 0.25)).norm() < 1e-12);
    for (int x = -20; x <= 20; ++x)
      for (int y = -20; y <= 20; ++y)
        for (int z = -20; z <= 20; ++z) {
          const VoxelKey k{x, y, z};
          REQUIRE(voxelKeyOf(voxelCenter(k, 0.1), 0.1) == k);
        }
  }

  TEST_CASE("voxel key is translation consistent") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-5, 5);
    std::uniform_int_distribution<int> shift(-30, 30);
    const double s = 0.25;  // exact in binary, so shifted points stay exact
    for (int i = 0; i < 2000; ++i) {
      const Vec3 p(pos(rng), pos(rng), pos(rng));
      const int a = shift(rng), b = shift(rng), c = shift(rng);
      const VoxelKey k = voxelKeyOf(p, s);
      const VoxelKey m = voxelKeyOf(Vec3(p + s * Vec3(a, b, c)), s);
      CHECK(m == VoxelKey{k.ix + a, k.iy + b, k.iz + c});
    }
  }

  TEST_CASE("camera mount looks forward and down") {
    CameraMount mount;
    mount.pitch = 0.0;
    const Pose cam = cameraPose(Pose::Identity(), mount);
    CHECK(cam.isValid());
    CHECK((cam.rotation.col(2) - Vec3(1, 0, 0)).norm() < 1e-12);
    CHECK((cam.translation - Vec3(mount.forward, 0, mount.height)).norm() < 1e-12);
    mount.pitch = 0.3;
    const Pose tilted = cameraPose(Pose::Identity(), mount);
    CHECK(tilted.rotation.col(2).z() < 0);
  }
}
