#include "travplant/voxelfusion.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

using namespace travplant;

namespace {

ClassLikelihood diag(double on, double off) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Constant(off);
  t.diagonal().setConstant(on);
  return {t};
}

TravLikelihood travTable() {
  TravLikelihood t;
  t.table.resize(2, 4);
  t.table << 0.4, 0.3, 0.2, 0.1, 0.1, 0.2, 0.3, 0.4;
  return t;
}

Frame blankFrame(int id = 0) {
  Frame f;
  f.frame_id = id;
  f.depth = DepthImage::Zero(f.height(), f.width());
  f.gt_class = LabelImage::Constant(f.height(), f.width(), kVoidLabel);
  f.gt_trav = MaskImage::Zero(f.height(), f.width());
  return f;
}

FramePrediction uniformPrediction(const Frame& f, std::uint8_t cls, double trav) {
  return {LabelImage::Constant(f.height(), f.width(), cls), ScalarImage::Constant(f.height(), f.width(), trav)};
}

SemanticVoxelMap calibratedMap(FusionParams p = {}) {
  SemanticVoxelMap m(p);
  m.setLikelihoods(diag(0.8, 0.1), TravLikelihood::Uniform(10));
  return m;
}

}  // namespace

TEST_SUITE("voxelfusion") {
  TEST_CASE("class likelihood calibration") {
    std::vector<LabelImage> ref{LabelImage(2, 3)};
    ref[0] << 0, 1, 2, 0, 1, 2;
    const ClassLikelihood perfect = calibrateClassLikelihood(ref, ref);
    CHECK((perfect.table - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(perfect.table.minCoeff() > 0);
    CHECK((perfect.table.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-9);

    std::vector<LabelImage> plant{LabelImage::Zero(2, 3)};
    const ClassLikelihood p = calibrateClassLikelihood(plant, ref);
    CHECK((p.table.col(0).array() > 0.99).all());

    std::vector<LabelImage> no_ground{LabelImage::Zero(2, 3)};
    CHECK_THROWS_AS(calibrateClassLikelihood(ref, no_ground), InvalidInput);
  }

  TEST_CASE("class likelihood recovers known confusion rates") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_real_distribution<double> u(0, 1);
    LabelImage ref(1000, 1000), pred(1000, 1000);
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      const int l = cls(rng);
      ref.data()[i] = static_cast<std::uint8_t>(l);
      const double r = u(rng);
      const int z = r < 0.8 ? l : (r < 0.9 ? (l + 1) % 3 : (l + 2) % 3);
      pred.data()[i] = static_cast<std::uint8_t>(z);
    }
    const ClassLikelihood L = calibrateClassLikelihood(std::vector{pred}, std::vector{ref});
    CHECK((L.table - diag(0.8, 0.1).table).cwiseAbs().maxCoeff() <= 0.005);
  }

  TEST_CASE("traversability likelihood calibration") {
    CHECK(travBin(1.0, 10) == 9);
    CHECK(travBin(0.0, 10) == 0);
    CHECK(travBin(0.1, 10) == 1);
    CHECK(travBin(0.0999, 10) == 0);

    MaskImage m(2, 2);
    m << 1, 0, 0, 1;
    const ScalarImage exact = m.cast<double>();
    const TravLikelihood t = calibrateTravLikelihood(std::vector{exact}, std::vector{m}, 10);
    CHECK(t.table(1, 9) > 0.99);
    CHECK(t.table(0, 0) > 0.99);
    CHECK(t.table.minCoeff() > 0);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    ScalarImage r(1000, 1000);
    MaskImage rm(1000, 1000);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      r.data()[i] = u(rng);
      rm.data()[i] = u(rng) < 0.5;
    }
    const TravLikelihood un = calibrateTravLikelihood(std::vector{r}, std::vector{rm}, 10);
    CHECK((un.table.array() - 0.1).abs().maxCoeff() <= 0.01);

    const MaskImage ones = MaskImage::Ones(2, 2);
    CHECK_THROWS_AS(calibrateTravLikelihood(std::vector{exact}, std::vector{ones}, 10), InvalidInput);
  }

  TEST_CASE("class Bayes update examples") {
    const ClassPosterior uniform = ClassPosterior::Constant(1.0 / 3);
    const ClassLikelihood L = diag(0.8, 0.1);
    CHECK((bayesClassUpdate(uniform, 0, L) - Vec3(0.8, 0.1, 0.1)).cwiseAbs().maxCoeff() < 1e-12);
    const ClassPosterior prior(0.2, 0.5, 0.3);
    CHECK((bayesClassUpdate(prior, 1, ClassLikelihood::Uniform()) - prior).cwiseAbs().maxCoeff() < 1e-15);
    ClassPosterior p = uniform;
    for (int i = 0; i < 5; ++i) p = bayesClassUpdate(p, 0, L);
    const double closed = std::pow(0.8, 5) / (std::pow(0.8, 5) + 2 * std::pow(0.1, 5));
    CHECK(p(0) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(p(0) >= 0.9999);
    CHECK_THROWS_AS(bayesClassUpdate(uniform, 3, L), InvalidInput);
  }

  TEST_CASE("traversability Bayes update examples") {
    TravLikelihood t;
    t.table.resize(2, 2);
    t.table << 0.1, 0.9, 0.9, 0.1;
    CHECK(bayesTravUpdate(0.5, 0, t) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(bayesTravUpdate(0.5, 0, TravLikelihood::Uniform(2)) == 0.5);
    CHECK(bayesTravUpdate(0.0, 0, t) == 0.0);
    CHECK(bayesTravUpdate(0.0, 1, t) == 0.0);
    CHECK_THROWS_AS(bayesTravUpdate(0.5, 2, t), InvalidInput);
  }

  TEST_CASE("update order and batching do not matter") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> cls(0, 2), bin(0, 3), len(1, 12);
    std::uniform_real_distribution<double> u(0.05, 1);
    const TravLikelihood T = travTable();
    for (int trial = 0; trial < 2000; ++trial) {
      Eigen::Matrix3d raw;
      for (int i = 0; i < 9; ++i) raw.data()[i] = u(rng);
      const ClassLikelihood L{floorAndNormalizeRows(raw)};
      std::vector<int> zs(len(rng)), bs(zs.size());
      for (auto& z : zs) z = cls(rng);
      for (auto& b : bs) b = bin(rng);
      ClassPosterior a = ClassPosterior::Constant(1.0 / 3);
      double qa = 0.5;
      for (std::size_t i = 0; i < zs.size(); ++i) {
        a = bayesClassUpdate(a, zs[i], L);
        qa = bayesTravUpdate(qa, bs[i], T);
      }
      std::shuffle(zs.begin(), zs.end(), rng);
      std::shuffle(bs.begin(), bs.end(), rng);
      ClassPosterior b = ClassPosterior::Constant(1.0 / 3);
      double qb = 0.5;
      Vec3 product = Vec3::Ones();
      double p1 = 1, p0 = 1;
      for (std::size_t i = 0; i < zs.size(); ++i) {
        b = bayesClassUpdate(b, zs[i], L);
        qb = bayesTravUpdate(qb, bs[i], T);
        product = product.cwiseProduct(L.table.col(zs[i]));
        p1 *= T.table(1, bs[i]);
        p0 *= T.table(0, bs[i]);
      }
      const Vec3 batch = product / product.sum();
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((a - batch).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(qa - qb) < 1e-12);
      CHECK(std::abs(qa - p1 / (p1 + p0)) < 1e-12);
    }
  }

  TEST_CASE("floor keeps every likelihood positive") {
    Eigen::MatrixXd counts(2, 3);
    counts << 5, 0, 5, 0, 0, 10;
    const Eigen::MatrixXd t = floorAndNormalizeRows(counts);
    CHECK(t.minCoeff() > 0);
    CHECK((t.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("one pixel creates one voxel with one update") {
    SemanticVoxelMap map = calibratedMap();
    Frame f = blankFrame();
    f.depth(24, 32) = 1.0f;
    const FrameReport r = map.integrateFrame(f, uniformPrediction(f, 0, 0.95));
    CHECK(r.created == 1);
    CHECK(r.touched == 1);
    REQUIRE(map.size() == 1);
    const VoxelState& v = map.voxels().begin()->second;
    CHECK(v.count == 1);
    CHECK((v.class_posterior - Vec3(0.8, 0.1, 0.1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(v.trav_posterior == doctest::Approx(0.5));
    CHECK((v.centroid() - backprojectPixelCenter(32, 24, 1.0, f.intr)).norm() < 1e-6);
  }

  TEST_CASE("majority class within a voxel") {
    SemanticVoxelMap map = calibratedMap();
    Frame f = blankFrame();
    FramePrediction pred = uniformPrediction(f, 0, 0.5);
    for (int u = 32; u < 35; ++u) f.depth(24, u) = 0.25f;
    pred.class_argmax(24, 34) = 2;
    map.integrateFrame(f, pred);
    REQUIRE(map.size() == 1);
    CHECK(map.voxels().begin()->second.mapClass() == 0);
    CHECK(map.voxels().begin()->second.count == 3);

    SemanticVoxelMap tie = calibratedMap();
    pred.class_argmax(24, 33) = 1;  // one vote each
    tie.integrateFrame(f, pred);
    CHECK((tie.voxels().begin()->second.class_posterior - Vec3(0.8, 0.1, 0.1)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("eviction after exactly ten missed frames") {
    for (int misses : {9, 10}) {
      SemanticVoxelMap map = calibratedMap();
      Frame f = blankFrame(0);
      f.depth(24, 32) = 1.0f;
      map.integrateFrame(f, uniformPrediction(f, 0, 0.9));
      REQUIRE(map.size() == 1);
      FrameReport last;
      for (int i = 1; i <= misses; ++i) last = map.integrateFrame(blankFrame(i), uniformPrediction(f, 0, 0.9));
      if (misses == 9) {
        CHECK(map.size() == 1);
        CHECK(map.voxels().begin()->second.miss_count == 9);
      } else {
        CHECK(map.size() == 0);
        CHECK(last.evicted == 1);
      }
    }
  }

  TEST_CASE("voxels outside the frustum are never aged") {
    SemanticVoxelMap map = calibratedMap();
    Frame f = blankFrame(0);
    f.depth(24, 32) = 1.0f;
    map.integrateFrame(f, uniformPrediction(f, 0, 0.9));
    for (int i = 1; i <= 30; ++i) {
      Frame away = blankFrame(i);
      away.pose = Pose::FromTranslation(Vec3(0, 0, 2));
      map.integrateFrame(away, uniformPrediction(away, 0, 0.9));
    }
    REQUIRE(map.size() == 1);
    CHECK(map.voxels().begin()->second.miss_count == 0);
    Frame far = blankFrame(40);
    far.pose = Pose::FromTranslation(Vec3(0, 0, -10));
    map.integrateFrame(far, uniformPrediction(far, 0, 0.9));
    CHECK(map.voxels().begin()->second.miss_count == 0);
  }

  TEST_CASE("centroid is the mean of every bucketed point") {
    SemanticVoxelMap map = calibratedMap();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(2.0, 2.08);
    std::map<VoxelKey, std::pair<Vec3, long>> log;
    for (int i = 0; i < 20; ++i) {
      Frame f = blankFrame(i);
      for (int v = 20; v < 28; ++v)
        for (int u = 28; u < 36; ++u) {
          f.depth(v, u) = static_cast<float>(d(rng));
          const Vec3 p = backprojectPixelCenter(u, v, f.depth(v, u), f.intr);
          auto& e = log.try_emplace(voxelKeyOf(p, 0.1), Vec3::Zero(), 0).first->second;
          e.first += p;
          ++e.second;
        }
      map.integrateFrame(f, uniformPrediction(f, 0, 0.9));
    }
    REQUIRE(map.size() == log.size());
    for (const auto& [k, e] : log) {
      const VoxelState* v = map.find(k);
      REQUIRE(v != nullptr);
      CHECK(v->count == e.second);
      CHECK((v->centroid() - e.first / static_cast<double>(e.second)).norm() < 1e-9);
    }
  }

  TEST_CASE("free-space rule") {
    SemanticVoxelMap map = calibratedMap();
    VoxelState v;
    v.count = 1;
    v.class_posterior = Vec3(0.9, 0.05, 0.05);
    v.trav_posterior = 0.8;
    CHECK(map.isFree(v));
    v.trav_posterior = 0.75;
    CHECK_FALSE(map.isFree(v));
    v.class_posterior = Vec3(0.2, 0.7, 0.1);
    v.trav_posterior = 0.99;
    CHECK_FALSE(map.isFree(v));
    CHECK(SemanticVoxelMap{}.obstacleCloud().empty());
  }

  TEST_CASE("obstacle cloud partitions the live voxels") {
    FusionParams params;
    SemanticVoxelMap map(params);
    TravLikelihood t;
    t.table.resize(2, 2);
    t.table << 0.9, 0.1, 0.1, 0.9;
    map.setLikelihoods(diag(0.8, 0.1), t);
    Frame f = blankFrame();
    FramePrediction pred = uniformPrediction(f, 0, 0.9);
    for (int u = 0; u < f.width(); ++u) f.depth(24, u) = 1.0f;
    for (int u = 0; u < 20; ++u) pred.traversability(24, u) = 0.1;
    for (int u = 40; u < 64; ++u) pred.class_argmax(24, u) = 2;
    for (int rep = 0; rep < 3; ++rep) map.integrateFrame(f, pred);
    std::size_t free = 0;
    for (const auto& kv : map.voxels()) free += map.isFree(kv.second);
    const auto cloud = map.obstacleCloud();
    CHECK(free > 0);
    CHECK(cloud.size() > 0);
    CHECK(free + cloud.size() == map.size());
    CHECK(map.obstacleCloud(FreeSpaceRule::AllObstacles).size() == map.size());
  }

  TEST_CASE("uncalibrated map refuses frames") {
    SemanticVoxelMap map;
    Frame f = blankFrame();
    CHECK_THROWS_AS(map.integrateFrame(f, uniformPrediction(f, 0, 0.5)), InvalidInput);
    FusionParams bad;
    bad.eviction_frames = 0;
    CHECK_THROWS_AS(SemanticVoxelMap{bad}, InvalidInput);
  }
}
