#ifndef TRAVPLANT_PIPELINE_HPP
#define TRAVPLANT_PIPELINE_HPP

#include "travplant/config.hpp"
#include "travplant/evalmetrics.hpp"
#include "travplant/navsim.hpp"
#include "travplant/pixelnet.hpp"
#include "travplant/synthworld.hpp"
#include "travplant/travmask.hpp"
#include "travplant/voxelfusion.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace travplant {

struct Dataset {
  RunConfig config;
  std::vector<Pose> trajectory;  // robot poses, one per frame
  std::vector<Frame> frames;
};

/// Renders one frame per trajectory pose along every corridor of the configured world.
Dataset generateDataset(const RunConfig& cfg);

/// Same config with the root seed replaced.
RunConfig withSeed(RunConfig cfg, std::uint64_t seed);

/// Noisy stand-ins for the segmentation pseudo-labels, one per frame.
std::vector<LabelImage> pseudoLabels(const Dataset& ds);

MaskDataset computeMasks(const Dataset& ds);

SoftmaxClassifier trainSsmStage(const Dataset& ds);
PuClassifier trainTemStage(const Dataset& ds, const MaskDataset& masks, const SoftmaxClassifier& ssm);
SoftmaxClassifier trainSeg4Stage(const Dataset& ds, const MaskDataset& masks);

struct Likelihoods {
  ClassLikelihood cls;
  TravLikelihood trav;
};

/// Class likelihood from held-out frames against their pseudo-labels; traversability
/// likelihood from the TEM training frames against their masks.
Likelihoods calibrateStage(const Dataset& held_out, const Dataset& train, const MaskDataset& masks,
                           const SoftmaxClassifier& ssm, const PuClassifier& tem, int bins);

struct EvalResult {
  CurveTable proposed;                 // raw + refined
  std::optional<CurveTable> baseline;  // segmentation traversable-plant channel
};

EvalResult evaluateModels(const Dataset& test, const SoftmaxClassifier& ssm, const PuClassifier& tem,
                          const SoftmaxClassifier* seg4);

/// variant,threshold,tp,fp,fn,tn,iou,accuracy,precision,recall
std::string curvesCsv(const EvalResult& r);
/// variant,threshold,iou,accuracy,precision,recall (percent) at each variant's best-IoU threshold
std::string summaryCsv(const EvalResult& r);

struct Experiment {
  Dataset train;
  Dataset held_out;
  Dataset test;
  MaskDataset masks;
  SoftmaxClassifier ssm;
  PuClassifier tem;
  SoftmaxClassifier seg4;
  Likelihoods likelihoods;
  EvalResult eval;

  PerceptionModels models() const { return {ssm, tem, likelihoods.cls, likelihoods.trav}; }
};

/// Full in-memory run: training world at seed s, test world at s + 1000 and
/// held-out calibration world at s + 2000.
Experiment runExperiment(const RunConfig& cfg, bool with_baseline = true);

NavScenario makeNavScenario(const WorldModel& world, const RunConfig& cfg, NavMode mode);

std::string traceCsv(const NavEpisodeResult& r);

// ---------------------------------------------------------------------------
// Disk layout
// ---------------------------------------------------------------------------

std::string frameStem(int frame_id);

void writeDataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset readDataset(const std::filesystem::path& dir);

void writeMasks(const std::filesystem::path& dir, const MaskDataset& masks, std::span<const Frame> frames);
MaskDataset readMasks(const std::filesystem::path& dir, const Dataset& ds);

/// Input hashes for an output directory, written as manifest.csv.
class Manifest {
 public:
  /// Records `root / relative` under `role:relative`.
  void add(const std::string& role, const std::filesystem::path& root, const std::filesystem::path& relative);
  /// Every regular file under `root`, in sorted order.
  void addTree(const std::string& role, const std::filesystem::path& root);
  std::string csv() const;

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

/// Writes the resolved config and the manifest into `dir`.
void finalizeOutput(const std::filesystem::path& dir, const RunConfig& cfg, const Manifest& manifest);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::vector<std::string> overrides;  // key=value
};

/// Explicit config file if given, else `fallback`, then overrides.
RunConfig resolveConfig(const CommandOptions& opts, const RunConfig& fallback = {});

void cmdWorld(const CommandOptions& opts, const std::filesystem::path& out);
void cmdMasks(const CommandOptions& opts, const std::filesystem::path& data, const std::filesystem::path& out);
void cmdTrainSsm(const CommandOptions& opts, const std::filesystem::path& data, const std::filesystem::path& out);
void cmdTrainTem(const CommandOptions& opts, const std::filesystem::path& data, const std::filesystem::path& masks,
                 const std::filesystem::path& ssm_dir, const std::filesystem::path& out);
void cmdTrainSeg4(const CommandOptions& opts, const std::filesystem::path& data, const std::filesystem::path& masks,
                  const std::filesystem::path& out);
void cmdCalibrate(const CommandOptions& opts, const std::filesystem::path& held_out, const std::filesystem::path& data,
                  const std::filesystem::path& masks, const std::filesystem::path& ssm_dir,
                  const std::filesystem::path& tem_dir, const std::filesystem::path& out);

struct EvalInputs {
  std::filesystem::path data;
  std::optional<std::filesystem::path> ssm_dir;
  std::optional<std::filesystem::path> tem_dir;
  std::optional<std::filesystem::path> seg4_dir;
  std::optional<std::filesystem::path> pred_dir;  // frames/NNNNNN.trav.rast [+ .class.rast]
};
void cmdEval(const CommandOptions& opts, const EvalInputs& in, const std::filesystem::path& out);

struct SimulateInputs {
  std::optional<std::filesystem::path> ssm_dir;
  std::optional<std::filesystem::path> tem_dir;
  std::optional<std::filesystem::path> calib_dir;
};
void cmdSimulate(const CommandOptions& opts, const SimulateInputs& in, const std::filesystem::path& out);

/// Concatenates summary.csv and results.csv files from the given run directories.
void cmdReport(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out);

}  // namespace travplant

#endif  // TRAVPLANT_PIPELINE_HPP
