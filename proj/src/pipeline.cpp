#include "travplant/pipeline.hpp"

#include "travplant/io.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace travplant {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTestSeedOffset = 1000;
constexpr std::uint64_t kHeldOutSeedOffset = 2000;

void requireDir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) throw InvalidInput(std::string("missing ") + what + " directory " + dir.string());
}

void requireFile(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InvalidInput("missing input file " + path.string());
}

std::vector<LabelImage> argmaxImages(std::span<const Frame> frames, const SoftmaxClassifier& ssm) {
  std::vector<LabelImage> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(predictSsm(f, ssm).argmax);
  return out;
}

std::vector<MaskImage> gtMasks(std::span<const Frame> frames) {
  std::vector<MaskImage> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.gt_trav);
  return out;
}

void appendCurveRows(std::ostringstream& out, const char* variant, const std::vector<CurveRow>& rows) {
  for (const auto& r : rows) {
    out << variant << ',' << formatDouble(r.threshold) << ',' << r.confusion.tp << ',' << r.confusion.fp << ','
        << r.confusion.fn << ',' << r.confusion.tn << ',' << formatPercent(r.metrics.iou) << ','
        << formatPercent(r.metrics.accuracy) << ',' << formatPercent(r.metrics.precision) << ','
        << formatPercent(r.metrics.recall) << '\n';
  }
}

void appendSummaryRow(std::ostringstream& out, const char* variant, const std::vector<CurveRow>& rows) {
  if (rows.empty()) return;
  const CurveRow& r = rows[CurveTable::bestIoU(rows)];
  out << variant << ',' << formatDouble(r.threshold) << ',' << formatPercent(r.metrics.iou) << ','
      << formatPercent(r.metrics.accuracy) << ',' << formatPercent(r.metrics.precision) << ','
      << formatPercent(r.metrics.recall) << '\n';
}

SoftmaxClassifier loadSoftmax(const fs::path& path) {
  requireFile(path);
  try {
    return softmaxFromCsv(readText(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

PuClassifier loadPu(const fs::path& path) {
  requireFile(path);
  try {
    return puFromCsv(readText(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Likelihoods loadLikelihoods(const fs::path& path) {
  requireFile(path);
  try {
    auto [cls, trav] = likelihoodsFromCsv(readText(path));
    return {cls, trav};
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> csvLines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

RunConfig withSeed(RunConfig cfg, std::uint64_t seed) {
  cfg.set("seed", std::to_string(seed));
  return cfg;
}

Dataset generateDataset(const RunConfig& cfg) {
  const ScenarioConfig sc = cfg.scenario();
  const WorldModel world = buildWorld(sc);
  Dataset ds;
  ds.config = cfg;
  std::mt19937_64 rng(deriveSeed(sc.seed, "render"));
  for (const auto& corridor : world.corridors) {
    PathSpec spec;
    spec.corridor_id = corridor.id;
    spec.spacing = sc.trajectory_spacing;
    for (const Pose& robot : scriptTrajectory(world, spec, sc.ground_clearance)) {
      const int id = static_cast<int>(ds.frames.size());
      ds.trajectory.push_back(robot);
      ds.frames.push_back(renderFrame(world, cameraPose(robot, sc.mount), sc.intrinsics, rng, id));
    }
  }
  return ds;
}

std::vector<LabelImage> pseudoLabels(const Dataset& ds) {
  const PseudoLabelNoise noise = ds.config.noise();
  const std::uint64_t root = ds.config.getSeed();
  std::vector<LabelImage> out;
  out.reserve(ds.frames.size());
  for (const auto& f : ds.frames)
    out.push_back(corruptLabels(f.gt_class, noise, deriveSeed(root, "pseudo/" + frameStem(f.frame_id))));
  return out;
}

MaskDataset computeMasks(const Dataset& ds) {
  return buildMaskDataset(ds.frames, ds.trajectory, ds.config.scenario().robot, ds.config.fusion().voxel_size);
}

SoftmaxClassifier trainSsmStage(const Dataset& ds) {
  const auto labels = pseudoLabels(ds);
  return trainSsm(ds.frames, labels, ds.config.trainHyper(), deriveSeed(ds.config.getSeed(), "train/ssm"));
}

PuClassifier trainTemStage(const Dataset& ds, const MaskDataset& masks, const SoftmaxClassifier& ssm) {
  return trainTem(ds.frames, masks.masks, ssm, ds.config.trainHyper(), deriveSeed(ds.config.getSeed(), "train/tem"),
                  ds.config.temOptions());
}

SoftmaxClassifier trainSeg4Stage(const Dataset& ds, const MaskDataset& masks) {
  const auto labels = pseudoLabels(ds);
  return trainSegWithTravClass(ds.frames, labels, masks.masks, ds.config.trainHyper(),
                               deriveSeed(ds.config.getSeed(), "train/seg4"));
}

Likelihoods calibrateStage(const Dataset& held_out, const Dataset& train, const MaskDataset& masks,
                           const SoftmaxClassifier& ssm, const PuClassifier& tem, int bins) {
  Likelihoods out;
  const auto reference = pseudoLabels(held_out);
  out.cls = calibrateClassLikelihood(argmaxImages(held_out.frames, ssm), reference);
  std::vector<ScalarImage> trav;
  trav.reserve(train.frames.size());
  for (const auto& f : train.frames) trav.push_back(predictTrav(f, ssm, tem));
  out.trav = calibrateTravLikelihood(trav, masks.masks, bins);
  return out;
}

EvalResult evaluateModels(const Dataset& test, const SoftmaxClassifier& ssm, const PuClassifier& tem,
                          const SoftmaxClassifier* seg4) {
  const auto thresholds = uniformThresholds(test.config.thresholdCount());
  const auto gt = gtMasks(test.frames);
  std::vector<ScalarImage> trav;
  std::vector<LabelImage> cls;
  for (const auto& f : test.frames) {
    trav.push_back(predictTrav(f, ssm, tem));
    cls.push_back(predictSsm(f, ssm).argmax);
  }
  EvalResult r;
  r.proposed = sweepCurves(trav, cls, gt, thresholds);
  if (seg4 != nullptr) {
    std::vector<ScalarImage> seg;
    for (const auto& f : test.frames) seg.push_back(predictSegTrav(f, *seg4));
    r.baseline = sweepCurves(seg, {}, gt, thresholds);
  }
  return r;
}

std::string curvesCsv(const EvalResult& r) {
  std::ostringstream out;
  out << "variant,threshold,tp,fp,fn,tn,iou,accuracy,precision,recall\n";
  appendCurveRows(out, "raw", r.proposed.raw);
  appendCurveRows(out, "refined", r.proposed.refined);
  if (r.baseline) appendCurveRows(out, "segmentation", r.baseline->raw);
  return out.str();
}

std::string summaryCsv(const EvalResult& r) {
  std::ostringstream out;
  out << "variant,threshold,iou,accuracy,precision,recall\n";
  appendSummaryRow(out, "raw", r.proposed.raw);
  appendSummaryRow(out, "refined", r.proposed.refined);
  if (r.baseline) appendSummaryRow(out, "segmentation", r.baseline->raw);
  return out.str();
}

Experiment runExperiment(const RunConfig& cfg, bool with_baseline) {
  const std::uint64_t seed = cfg.getSeed();
  Experiment e;
  e.train = generateDataset(cfg);
  e.held_out = generateDataset(withSeed(cfg, seed + kHeldOutSeedOffset));
  e.test = generateDataset(withSeed(cfg, seed + kTestSeedOffset));
  e.masks = computeMasks(e.train);
  e.ssm = trainSsmStage(e.train);
  e.tem = trainTemStage(e.train, e.masks, e.ssm);
  if (with_baseline) e.seg4 = trainSeg4Stage(e.train, e.masks);
  e.likelihoods = calibrateStage(e.held_out, e.train, e.masks, e.ssm, e.tem, cfg.travBins());
  e.eval = evaluateModels(e.test, e.ssm, e.tem, with_baseline ? &e.seg4 : nullptr);
  return e;
}

NavScenario makeNavScenario(const WorldModel& world, const RunConfig& cfg, NavMode mode) {
  const Corridor& c = world.corridor(static_cast<int>(cfg.getInt("nav.corridor")));
  NavScenario s;
  s.params = cfg.navParams();
  s.mode = mode;
  s.controller = cfg.get("nav.controller") == "subgoal" ? ControllerKind::Subgoal : ControllerKind::ForwardStop;
  s.start = {c.x_start - cfg.getDouble("nav.start_offset"), c.y_center, 0.0};
  s.goal = Eigen::Vector2d(c.x_end + cfg.getDouble("nav.goal_offset"), c.y_center);
  const double spacing = cfg.getDouble("nav.subgoal_spacing");
  if (spacing > 0)
    for (double x = s.start.x + spacing; x < s.goal.x() - 1e-9; x += spacing) s.subgoals.emplace_back(x, c.y_center);
  s.render_seed = deriveSeed(cfg.getSeed(), "nav/render");
  return s;
}

std::string traceCsv(const NavEpisodeResult& r) {
  std::ostringstream out;
  out << "tick,time,x,y,theta,v,omega,stopped,stop_events,map_size,obstacle_points\n";
  for (const auto& t : r.trace) {
    out << t.tick << ',' << formatDouble(t.time) << ',' << formatDouble(t.pose.x) << ',' << formatDouble(t.pose.y)
        << ',' << formatDouble(t.pose.theta) << ',' << formatDouble(t.cmd.v) << ',' << formatDouble(t.cmd.omega) << ','
        << (t.stopped ? 1 : 0) << ',' << t.stop_events << ',' << t.map_size << ',' << t.obstacle_points << '\n';
  }
  return out.str();
}

std::string frameStem(int frame_id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", frame_id);
  return buf;
}

void writeDataset(const fs::path& dir, const Dataset& ds) {
  std::vector<PoseRecord> cams;
  std::vector<PoseRecord> robots;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const Frame& f = ds.frames[i];
    const fs::path stem = dir / "frames" / frameStem(f.frame_id);
    writeRaster(stem.string() + ".feat.rast", toRaster(f.features, f.height(), f.width()));
    writeRaster(stem.string() + ".depth.rast", toRaster(f.depth));
    writeRaster(stem.string() + ".class.rast", toRaster(f.gt_class));
    writeRaster(stem.string() + ".trav.rast", toRaster(f.gt_trav));
    cams.push_back({f.frame_id, f.pose});
    robots.push_back({f.frame_id, ds.trajectory[i]});
  }
  writeTextAtomic(dir / "poses.csv", posesToCsv(cams));
  writeTextAtomic(dir / "trajectory.csv", posesToCsv(robots));
  writeTextAtomic(dir / "scenario.cfg", ds.config.resolved());
}

Dataset readDataset(const fs::path& dir) {
  requireDir(dir, "dataset");
  Dataset ds;
  ds.config = RunConfig::load(dir / "scenario.cfg");
  const ScenarioConfig sc = ds.config.scenario();
  requireFile(dir / "poses.csv");
  requireFile(dir / "trajectory.csv");
  const auto cams = posesFromCsv(readText(dir / "poses.csv"));
  const auto robots = posesFromCsv(readText(dir / "trajectory.csv"));
  if (cams.size() != robots.size()) throw FormatError("dataset: poses.csv and trajectory.csv differ in length");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    if (cams[i].frame_id != robots[i].frame_id) throw FormatError("dataset: frame ids differ between pose files");
    Frame f;
    f.frame_id = cams[i].frame_id;
    f.pose = cams[i].pose;
    f.intr = sc.intrinsics;
    const std::string stem = (dir / "frames" / frameStem(f.frame_id)).string();
    for (const char* ext : {".feat.rast", ".depth.rast", ".class.rast", ".trav.rast"}) requireFile(stem + ext);
    f.features = rasterToPixels(readRaster(stem + ".feat.rast"));
    f.depth = rasterToFloatImage(readRaster(stem + ".depth.rast"));
    f.gt_class = rasterToByteImage(readRaster(stem + ".class.rast"));
    f.gt_trav = rasterToByteImage(readRaster(stem + ".trav.rast"));
    const auto h = sc.intrinsics.height;
    const auto w = sc.intrinsics.width;
    if (f.depth.rows() != h || f.depth.cols() != w || f.gt_class.rows() != h || f.gt_class.cols() != w ||
        f.gt_trav.rows() != h || f.gt_trav.cols() != w || f.features.rows() != static_cast<Eigen::Index>(h) * w ||
        f.features.cols() != sc.feature_dim)
      throw FormatError("dataset: frame " + frameStem(f.frame_id) + " does not match the configured shape");
    ds.frames.push_back(std::move(f));
    ds.trajectory.push_back(robots[i].pose);
  }
  return ds;
}

void writeMasks(const fs::path& dir, const MaskDataset& masks, std::span<const Frame> frames) {
  for (std::size_t i = 0; i < frames.size(); ++i)
    writeRaster((dir / "masks" / (frameStem(frames[i].frame_id) + ".mask.rast")), toRaster(masks.masks[i]));
  const auto keys = masks.traversed.sortedKeys();
  writeTextAtomic(dir / "swept.csv", keysToCsv(keys));
  std::ostringstream stats;
  stats << "frames,swept_voxels,labeled_pixels,gt_traversable_pixels,coverage\n"
        << frames.size() << ',' << masks.traversed.size() << ',' << masks.labeled_pixels << ','
        << masks.gt_traversable_pixels << ',' << formatDouble(masks.coverage()) << '\n';
  writeTextAtomic(dir / "stats.csv", stats.str());
}

MaskDataset readMasks(const fs::path& dir, const Dataset& ds) {
  requireDir(dir, "masks");
  MaskDataset out;
  out.traversed.voxel_size = ds.config.fusion().voxel_size;
  for (const auto& f : ds.frames) {
    const fs::path p = dir / "masks" / (frameStem(f.frame_id) + ".mask.rast");
    requireFile(p);
    MaskImage m = rasterToByteImage(readRaster(p));
    if (m.rows() != f.height() || m.cols() != f.width()) throw FormatError(p.string() + ": mask shape mismatch");
    out.labeled_pixels += static_cast<std::size_t>((m != 0).count());
    out.gt_traversable_pixels += static_cast<std::size_t>((f.gt_trav != 0).count());
    out.masks.push_back(std::move(m));
  }
  requireFile(dir / "swept.csv");
  const auto lines = csvLines(readText(dir / "swept.csv"));
  if (lines.empty() || lines.front() != "ix,iy,iz") throw FormatError("swept.csv: missing header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = splitCsvLine(lines[i]);
    if (f.size() != 3) throw FormatError("swept.csv: expected 3 fields");
    out.traversed.keys.insert({static_cast<std::int32_t>(parseDouble(f[0])), static_cast<std::int32_t>(parseDouble(f[1])),
                               static_cast<std::int32_t>(parseDouble(f[2]))});
  }
  return out;
}

void Manifest::add(const std::string& role, const fs::path& root, const fs::path& relative) {
  const fs::path p = root / relative;
  requireFile(p);
  rows_.emplace_back(role + ":" + relative.generic_string(), sha256File(p));
}

void Manifest::addTree(const std::string& role, const fs::path& root) {
  requireDir(root, role.c_str());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root));
  std::sort(files.begin(), files.end());
  for (const auto& rel : files) add(role, root, rel);
}

std::string Manifest::csv() const {
  std::string out = "input,sha256\n";
  for (const auto& [name, hash] : rows_) out += name + "," + hash + "\n";
  return out;
}

void finalizeOutput(const fs::path& dir, const RunConfig& cfg, const Manifest& manifest) {
  writeTextAtomic(dir / "config.cfg", cfg.resolved());
  writeTextAtomic(dir / "manifest.csv", manifest.csv());
}

RunConfig resolveConfig(const CommandOptions& opts, const RunConfig& fallback) {
  RunConfig cfg = opts.config ? RunConfig::load(*opts.config) : fallback;
  for (const auto& o : opts.overrides) cfg.apply(o);
  return cfg;
}

void cmdWorld(const CommandOptions& opts, const fs::path& out) {
  const RunConfig cfg = resolveConfig(opts);
  const Dataset ds = generateDataset(cfg);
  writeDataset(out, ds);
  Manifest m;
  if (opts.config) m.add("config", opts.config->parent_path(), opts.config->filename());
  finalizeOutput(out, cfg, m);
}

void cmdMasks(const CommandOptions& opts, const fs::path& data, const fs::path& out) {
  Dataset ds = readDataset(data);
  ds.config = resolveConfig(opts, ds.config);
  const MaskDataset masks = computeMasks(ds);
  writeMasks(out, masks, ds.frames);
  Manifest m;
  m.addTree("data", data);
  finalizeOutput(out, ds.config, m);
}

void cmdTrainSsm(const CommandOptions& opts, const fs::path& data, const fs::path& out) {
  Dataset ds = readDataset(data);
  ds.config = resolveConfig(opts, ds.config);
  writeTextAtomic(out / "ssm.csv", softmaxToCsv(trainSsmStage(ds)));
  Manifest m;
  m.addTree("data", data);
  finalizeOutput(out, ds.config, m);
}

void cmdTrainTem(const CommandOptions& opts, const fs::path& data, const fs::path& masks_dir, const fs::path& ssm_dir,
                 const fs::path& out) {
  Dataset ds = readDataset(data);
  ds.config = resolveConfig(opts, ds.config);
  const MaskDataset masks = readMasks(masks_dir, ds);
  const SoftmaxClassifier ssm = loadSoftmax(ssm_dir / "ssm.csv");
  writeTextAtomic(out / "tem.csv", puToCsv(trainTemStage(ds, masks, ssm)));
  Manifest m;
  m.addTree("data", data);
  m.addTree("masks", masks_dir);
  m.add("ssm", ssm_dir, "ssm.csv");
  finalizeOutput(out, ds.config, m);
}

void cmdTrainSeg4(const CommandOptions& opts, const fs::path& data, const fs::path& masks_dir, const fs::path& out) {
  Dataset ds = readDataset(data);
  ds.config = resolveConfig(opts, ds.config);
  const MaskDataset masks = readMasks(masks_dir, ds);
  writeTextAtomic(out / "seg4.csv", softmaxToCsv(trainSeg4Stage(ds, masks)));
  Manifest m;
  m.addTree("data", data);
  m.addTree("masks", masks_dir);
  finalizeOutput(out, ds.config, m);
}

void cmdCalibrate(const CommandOptions& opts, const fs::path& held_out_dir, const fs::path& data,
                  const fs::path& masks_dir, const fs::path& ssm_dir, const fs::path& tem_dir, const fs::path& out) {
  Dataset train = readDataset(data);
  train.config = resolveConfig(opts, train.config);
  const Dataset held_out = readDataset(held_out_dir);
  const MaskDataset masks = readMasks(masks_dir, train);
  const SoftmaxClassifier ssm = loadSoftmax(ssm_dir / "ssm.csv");
  const PuClassifier tem = loadPu(tem_dir / "tem.csv");
  const Likelihoods lik = calibrateStage(held_out, train, masks, ssm, tem, train.config.travBins());
  writeTextAtomic(out / "likelihoods.csv", likelihoodsToCsv(lik.cls, lik.trav));
  Manifest m;
  m.addTree("heldout", held_out_dir);
  m.addTree("data", data);
  m.addTree("masks", masks_dir);
  m.add("ssm", ssm_dir, "ssm.csv");
  m.add("tem", tem_dir, "tem.csv");
  finalizeOutput(out, train.config, m);
}

void cmdEval(const CommandOptions& opts, const EvalInputs& in, const fs::path& out) {
  Dataset test = readDataset(in.data);
  test.config = resolveConfig(opts, test.config);
  Manifest m;
  m.addTree("data", in.data);
  EvalResult r;
  if (in.pred_dir) {
    requireDir(*in.pred_dir, "prediction");
    std::vector<ScalarImage> trav;
    std::vector<LabelImage> cls;
    bool have_class = true;
    for (const auto& f : test.frames) {
      const std::string stem = (*in.pred_dir / "frames" / frameStem(f.frame_id)).string();
      requireFile(stem + ".trav.rast");
      const Raster raster = readRaster(stem + ".trav.rast");
      ScalarImage t = raster.dtype == RasterType::UInt8 ? rasterToByteImage(raster).cast<double>().eval()
                                                        : rasterToFloatImage(raster).cast<double>().eval();
      if (t.rows() != f.height() || t.cols() != f.width()) throw FormatError(stem + ".trav.rast: shape mismatch");
      trav.push_back(std::move(t));
      if (have_class && fs::is_regular_file(stem + ".class.rast"))
        cls.push_back(rasterToByteImage(readRaster(stem + ".class.rast")));
      else
        have_class = false;
    }
    if (!have_class) cls.clear();
    const auto thresholds = uniformThresholds(test.config.thresholdCount());
    r.proposed = sweepCurves(trav, cls, gtMasks(test.frames), thresholds);
    m.addTree("pred", *in.pred_dir);
  } else {
    if (!in.ssm_dir || !in.tem_dir) throw InvalidInput("eval: either --pred or both --ssm and --tem are required");
    const SoftmaxClassifier ssm = loadSoftmax(*in.ssm_dir / "ssm.csv");
    const PuClassifier tem = loadPu(*in.tem_dir / "tem.csv");
    m.add("ssm", *in.ssm_dir, "ssm.csv");
    m.add("tem", *in.tem_dir, "tem.csv");
    std::optional<SoftmaxClassifier> seg4;
    if (in.seg4_dir) {
      seg4 = loadSoftmax(*in.seg4_dir / "seg4.csv");
      m.add("seg4", *in.seg4_dir, "seg4.csv");
    }
    r = evaluateModels(test, ssm, tem, seg4 ? &*seg4 : nullptr);
  }
  writeTextAtomic(out / "curves.csv", curvesCsv(r));
  writeTextAtomic(out / "summary.csv", summaryCsv(r));
  finalizeOutput(out, test.config, m);
}

void cmdSimulate(const CommandOptions& opts, const SimulateInputs& in, const fs::path& out) {
  const RunConfig cfg = resolveConfig(opts);
  const std::string mode = cfg.get("nav.mode");
  std::vector<NavMode> modes;
  if (mode != "proposed") modes.push_back(NavMode::Baseline);
  if (mode != "baseline") modes.push_back(NavMode::Proposed);

  Manifest m;
  std::optional<PerceptionModels> models;
  if (mode != "baseline") {
    if (!in.ssm_dir || !in.tem_dir || !in.calib_dir)
      throw InvalidInput("simulate: proposed mode requires --ssm, --tem and --calib");
    const Likelihoods lik = loadLikelihoods(*in.calib_dir / "likelihoods.csv");
    models = PerceptionModels{loadSoftmax(*in.ssm_dir / "ssm.csv"), loadPu(*in.tem_dir / "tem.csv"), lik.cls, lik.trav};
    if (models->trav_likelihood.bins() != cfg.travBins())
      throw ConfigError("simulate: likelihood bin count differs from fusion.trav_bins");
    m.add("ssm", *in.ssm_dir, "ssm.csv");
    m.add("tem", *in.tem_dir, "tem.csv");
    m.add("calib", *in.calib_dir, "likelihoods.csv");
  }
  if (opts.config) m.add("config", opts.config->parent_path(), opts.config->filename());

  const long long episodes = cfg.getInt("nav.episodes");
  if (episodes < 1) throw ConfigError("config: nav.episodes must be >= 1");
  std::ostringstream results;
  results << "episode,seed,mode,controller,outcome,distance,sim_time,stop_events,interventions\n";
  for (long long e = 0; e < episodes; ++e) {
    const RunConfig ecfg = withSeed(cfg, cfg.getSeed() + static_cast<std::uint64_t>(e));
    const ScenarioConfig sc = ecfg.scenario();
    const WorldModel world = buildWorld(sc);
    const RobotRig rig = rigFromScenario(sc);
    for (NavMode nm : modes) {
      const NavScenario scenario = makeNavScenario(world, ecfg, nm);
      const NavEpisodeResult r = runEpisode(world, rig, scenario, ecfg.fusion(), models ? &*models : nullptr);
      const std::string name = "episode_" + frameStem(static_cast<int>(e)) + "_" + toString(nm) + ".csv";
      writeTextAtomic(out / "traces" / name, traceCsv(r));
      results << e << ',' << ecfg.getSeed() << ',' << toString(nm) << ',' << toString(scenario.controller) << ','
              << toString(r.outcome) << ',' << formatDouble(r.distance) << ',' << formatDouble(r.sim_time) << ','
              << r.stop_events << ',' << r.interventions << '\n';
    }
  }
  writeTextAtomic(out / "results.csv", results.str());
  finalizeOutput(out, cfg, m);
}

void cmdReport(const std::vector<fs::path>& inputs, const fs::path& out) {
  if (inputs.empty()) throw InvalidInput("report: no input directories");
  std::ostringstream summary;
  std::ostringstream results;
  std::map<std::pair<std::string, std::string>, int> outcome_counts;
  std::string summary_header;
  std::string results_header;
  Manifest m;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path& dir = inputs[i];
    requireDir(dir, "report input");
    const std::string source = std::to_string(i) + ":" + dir.filename().string();
    bool found = false;
    for (const auto& [file, stream, header] :
         {std::tuple{"summary.csv", &summary, &summary_header}, std::tuple{"results.csv", &results, &results_header}}) {
      if (!fs::is_regular_file(dir / file)) continue;
      found = true;
      m.add("input" + std::to_string(i), dir, file);
      const auto lines = csvLines(readText(dir / file));
      if (lines.empty()) throw FormatError((dir / file).string() + ": empty file");
      if (header->empty()) *header = lines.front();
      if (*header != lines.front()) throw FormatError((dir / file).string() + ": header mismatch");
      for (std::size_t l = 1; l < lines.size(); ++l) {
        *stream << source << ',' << lines[l] << '\n';
        if (stream == &results) {
          const auto f = splitCsvLine(lines[l]);
          if (f.size() < 5) throw FormatError((dir / file).string() + ": short row");
          ++outcome_counts[{f[2], f[4]}];
        }
      }
    }
    if (!found) throw InvalidInput("report: " + dir.string() + " holds neither summary.csv nor results.csv");
  }
  if (!summary_header.empty()) writeTextAtomic(out / "summary.csv", "source," + summary_header + "\n" + summary.str());
  if (!results_header.empty()) {
    writeTextAtomic(out / "results.csv", "source," + results_header + "\n" + results.str());
    std::ostringstream counts;
    counts << "mode,outcome,count\n";
    for (const auto& [key, n] : outcome_counts) counts << key.first << ',' << key.second << ',' << n << '\n';
    writeTextAtomic(out / "outcomes.csv", counts.str());
  }
  finalizeOutput(out, RunConfig{}, m);
}

}  // namespace travplant
