#include "gradcheck.hpp"
#include "scar.hpp"
#include "travplant/io.hpp"
#include "travplant/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>

using namespace travplant;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double bestIoU(const std::vector<CurveRow>& rows) { return *rows[CurveTable::bestIoU(rows)].metrics.iou; }

// Shared by the table-ordering and navigation criteria.
const Experiment& experiment(std::uint64_t seed) {
  static std::map<std::uint64_t, Experiment> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) it = cache.emplace(seed, runExperiment(withSeed(RunConfig{}, seed), true)).first;
  return it->second;
}

Verdict puRecovery() {
  const auto t0 = Clock::now();
  const scar::Problem p;
  int good_c = 0;
  double worst_mae = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = scar::draw(p, 20000, seed);
    PuClassifier pu;
    pu.label_model = fitLabelModel(s.X, s.s, TrainHyper{}, seed);
    pu.c = estimateLabelFrequency(pu.label_model, scar::labeledRows(s));
    good_c += std::abs(pu.c - p.c) <= 0.05;
    const auto held = scar::draw(p, 20000, seed + 500);
    const Eigen::VectorXd pred = pu.predict(held.X);
    double mae = 0;
    for (Eigen::Index i = 0; i < held.X.rows(); ++i) mae += std::abs(pred(i) - p.posterior(held.X.row(i)));
    worst_mae = std::max(worst_mae, mae / held.X.rows());
  }
  const double t = secondsSince(t0);
  return {good_c >= 9 && worst_mae <= 0.08 && t <= 60,
          std::to_string(good_c) + "/10 seeds with |c-0.45|<=0.05, worst MAE " + fmt("%.4f", worst_mae) + ", " +
              fmt("%.1f s", t)};
}

Verdict tableOrdering() {
  bool ok = true;
  std::ostringstream d;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const EvalResult& r = experiment(seed).eval;
    const double raw = bestIoU(r.proposed.raw), ref = bestIoU(r.proposed.refined), seg = bestIoU(r.baseline->raw);
    bool contained = true;
    for (std::size_t j = 0; j < r.proposed.raw.size(); ++j)
      contained &= r.proposed.refined[j].confusion.fp <= r.proposed.raw[j].confusion.fp;
    const double gap = 100 * (raw - seg);
    ok &= gap >= 10 && 100 * ref >= 100 * raw - 0.5 && contained;
    d << (seed > 1 ? "; " : "") << "seed " << seed << " raw " << fmt("%.2f", 100 * raw) << " refined "
      << fmt("%.2f", 100 * ref) << " seg " << fmt("%.2f", 100 * seg) << (contained ? "" : " FP not contained");
  }
  return {ok, d.str()};
}

Verdict fusionClosedForm() {
  Eigen::Matrix3d t = Eigen::Matrix3d::Constant(0.1);
  t.diagonal().setConstant(0.8);
  const ClassLikelihood L{t};
  ClassPosterior p = ClassPosterior::Constant(1.0 / 3);
  for (int i = 0; i < 5; ++i) p = bayesClassUpdate(p, 0, L);
  const double closed = std::pow(0.8, 5) / (std::pow(0.8, 5) + 2 * std::pow(0.1, 5));
  bool ok = p(0) >= 0.9999 && std::abs(p(0) - closed) < 1e-12;

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.01, 1);
  std::uniform_int_distribution<int> cls(0, 2), len(1, 20);
  double worst_perm = 0, worst_batch = 0, worst_simplex = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    Eigen::Matrix3d raw;
    for (int i = 0; i < 9; ++i) raw.data()[i] = u(rng);
    const ClassLikelihood R{floorAndNormalizeRows(raw)};
    std::vector<int> zs(len(rng));
    for (auto& z : zs) z = cls(rng);
    ClassPosterior a = ClassPosterior::Constant(1.0 / 3);
    Vec3 prod = Vec3::Ones();
    for (int z : zs) {
      a = bayesClassUpdate(a, z, R);
      prod = prod.cwiseProduct(R.table.col(z));
      worst_simplex = std::max(worst_simplex, std::abs(a.sum() - 1));
    }
    std::shuffle(zs.begin(), zs.end(), rng);
    ClassPosterior b = ClassPosterior::Constant(1.0 / 3);
    for (int z : zs) b = bayesClassUpdate(b, z, R);
    worst_perm = std::max(worst_perm, (a - b).cwiseAbs().maxCoeff());
    worst_batch = std::max(worst_batch, (a - prod / prod.sum()).cwiseAbs().maxCoeff());
  }
  ok &= worst_perm <= 1e-12 && worst_batch <= 1e-12 && worst_simplex <= 1e-9;
  return {ok, "posterior " + fmt("%.6f", p(0)) + ", permutation " + fmt("%.1e", worst_perm) + ", batch " +
                  fmt("%.1e", worst_batch) + ", simplex " + fmt("%.1e", worst_simplex)};
}

Verdict eviction() {
  auto survivors = [](int misses) {
    SemanticVoxelMap map;
    map.setLikelihoods(ClassLikelihood::Uniform(), TravLikelihood::Uniform(10));
    Frame f;
    f.depth = DepthImage::Zero(f.height(), f.width());
    const FramePrediction pred{LabelImage::Zero(f.height(), f.width()), ScalarImage::Zero(f.height(), f.width())};
    f.depth(24, 32) = 1.0f;
    map.integrateFrame(f, pred);
    f.depth.setZero();
    FrameReport last;
    for (int i = 1; i <= misses; ++i) {
      f.frame_id = i;
      last = map.integrateFrame(f, pred);
    }
    return std::make_pair(map.size(), last.evicted);
  };
  const auto [after9, ev9] = survivors(9);
  const auto [after10, ev10] = survivors(10);
  return {after9 == 1 && ev9 == 0 && after10 == 0 && ev10 == 1,
          "9 misses -> " + std::to_string(after9) + " voxel, 10 misses -> " + std::to_string(after10) + " voxels"};
}

Verdict masks() {
  const Dataset ds = generateDataset(RunConfig{});
  const MaskDataset md = computeMasks(ds);
  std::size_t positive = 0, sound = 0;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const Frame& f = ds.frames[i];
    for (int v = 0; v < f.height(); ++v)
      for (int u = 0; u < f.width(); ++u) {
        if (!md.masks[i](v, u)) continue;
        ++positive;
        if (f.depth(v, u) > 0 &&
            md.traversed.contains(voxelKeyOf(f.pose * backprojectPixelCenter(u, v, f.depth(v, u), f.intr), 0.1)))
          ++sound;
      }
  }
  const double cov = md.coverage();
  return {positive > 0 && sound == positive && cov >= 0.3 && cov <= 0.6,
          std::to_string(sound) + "/" + std::to_string(positive) + " positives in swept voxels, coverage " +
              fmt("%.3f", cov)};
}

Verdict navigation() {
  const PerceptionModels models = experiment(1).models();
  const auto t0 = Clock::now();
  int base_stuck = 0, prop_traversed = 0, wall_ok = 0, collisions = 0;
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    const RunConfig cfg = withSeed(RunConfig{}, seed);
    const WorldModel world = buildWorld(cfg.scenario());
    const RobotRig rig = rigFromScenario(cfg.scenario());
    for (NavMode mode : {NavMode::Baseline, NavMode::Proposed}) {
      const auto r = runEpisode(world, rig, makeNavScenario(world, cfg, mode), cfg.fusion(), &models);
      collisions += r.outcome == Outcome::Collision;
      if (mode == NavMode::Baseline) base_stuck += r.outcome == Outcome::Stuck;
      if (mode == NavMode::Proposed) prop_traversed += r.outcome == Outcome::Traversed;
    }
    RunConfig wall = cfg;
    wall.apply("world.wall_x=3");
    wall.apply("world.overhang_fraction=0");
    const WorldModel wworld = buildWorld(wall.scenario());
    bool both_stop = true;
    for (NavMode mode : {NavMode::Baseline, NavMode::Proposed}) {
      const auto r = runEpisode(wworld, rig, makeNavScenario(wworld, wall, mode), wall.fusion(), &models);
      collisions += r.outcome == Outcome::Collision;
      both_stop &= r.outcome == Outcome::Stuck && r.stop_events > 0;
    }
    wall_ok += both_stop;
  }
  const double t = secondsSince(t0);
  return {base_stuck == 5 && prop_traversed >= 4 && wall_ok == 5 && collisions == 0 && t <= 180,
          "overhang: baseline stuck " + std::to_string(base_stuck) + "/5, proposed traversed " +
              std::to_string(prop_traversed) + "/5; wall: both stopped " + std::to_string(wall_ok) +
              "/5; collisions " + std::to_string(collisions) + ", " + fmt("%.1f s", t)};
}

Verdict numericalHygiene() {
  std::mt19937_64 rng(1234);
  double worst_log = 0, worst_soft = 0;
  for (int i = 0; i < 100; ++i) worst_log = std::max(worst_log, gradcheck::logisticGradError(rng));
  for (int i = 0; i < 100; ++i) worst_soft = std::max(worst_soft, gradcheck::softmaxGradError(rng));
  std::bernoulli_distribution coin(0.5);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    MaskImage a(16, 16), b(16, 16);
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      a.data()[k] = coin(rng);
      b.data()[k] = coin(rng);
    }
    Confusion o;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const bool p = a.data()[k], g = b.data()[k];
      (p ? (g ? o.tp : o.fp) : (g ? o.fn : o.tn))++;
    }
    const Metrics m = metrics(confusion(a, b));
    const double iou = static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fp + o.fn);
    const double acc = static_cast<double>(o.tp + o.tn) / 256.0;
    exact += confusion(a, b) == o && m.iou && *m.iou == iou && *m.accuracy == acc;
  }
  return {worst_log < 1e-4 && worst_soft < 1e-4 && exact == 1000,
          "logistic " + fmt("%.1e", worst_log) + ", softmax " + fmt("%.1e", worst_soft) + ", metric oracle " +
              std::to_string(exact) + "/1000"};
}

std::map<std::string, std::string> treeHashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = sha256File(e.path());
  return out;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "travplant_acceptance";
  fs::remove_all(root);
  std::map<std::string, std::string> runs[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path d = root / std::to_string(k);
    const CommandOptions o;
    cmdWorld(o, d / "world");
    cmdMasks(o, d / "world", d / "masks");
    cmdTrainSsm(o, d / "world", d / "ssm");
    cmdTrainTem(o, d / "world", d / "masks", d / "ssm", d / "tem");
    runs[k] = treeHashes(d);
  }
  fs::remove_all(root);
  const bool same = !runs[0].empty() && runs[0] == runs[1];

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(0, 70), ch(1, 8);
  std::normal_distribution<float> val(0, 1e3f);
  int exact = 0;
  for (int i = 0; i < 500; ++i) {
    const int h = dim(rng), w = dim(rng), c = ch(rng);
    PixelMatrix<float> px(h * w, c);
    for (Eigen::Index k = 0; k < px.size(); ++k) px.data()[k] = val(rng);
    const auto bytes = encodeRaster(toRaster(px, h, w));
    const PixelMatrix<float> back = rasterToPixels(decodeRaster(bytes));
    exact += back.rows() == px.rows() && back.cols() == px.cols() && back == px;
  }
  return {same && exact == 500, std::to_string(runs[0].size()) + " files " + (same ? "identical" : "differ") +
                                    " across two runs, raster fuzz " + std::to_string(exact) + "/500"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"pu label-frequency recovery", puRecovery},
      {"traversability IoU ordering", tableOrdering},
      {"bayes fusion closed form", fusionClosedForm},
      {"voxel eviction", eviction},
      {"mask soundness and coverage", masks},
      {"navigation outcomes", navigation},
      {"numerical hygiene", numericalHygiene},
      {"determinism and raster io", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
