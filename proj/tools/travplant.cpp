#include "travplant/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kMissingInput = 3,
  kConfig = 4,
  kFormat = 5,
  kDegenerate = 6,
  kFailure = 7,
};

void addConfigOptions(CLI::App* cmd, travplant::CommandOptions& opts) {
  cmd->add_option("-c,--config", opts.config, "key=value config file");
  cmd->add_option("-s,--set", opts.overrides, "override one config key (key=value)");
}

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace travplant;

  CLI::App app{"Traversable-plant perception and navigation pipeline"};
  app.require_subcommand(1);

  CommandOptions opts;
  fs::path out;
  fs::path data;
  fs::path masks;
  fs::path held_out;
  fs::path ssm_dir;
  fs::path tem_dir;
  EvalInputs eval_in;
  SimulateInputs sim_in;
  std::vector<fs::path> report_inputs;

  auto* world = app.add_subcommand("world", "generate a world and render a dataset");
  addConfigOptions(world, opts);
  world->add_option("-o,--out", out, "dataset directory")->required();

  auto* mask_cmd = app.add_subcommand("masks", "sweep the footprint and render traversability masks");
  addConfigOptions(mask_cmd, opts);
  mask_cmd->add_option("-d,--data", data, "dataset directory")->required();
  mask_cmd->add_option("-o,--out", out, "mask directory")->required();

  auto* train = app.add_subcommand("train", "train a pixel classifier");
  train->require_subcommand(1);
  auto* ssm = train->add_subcommand("ssm", "three-class segmentation on pseudo-labels");
  addConfigOptions(ssm, opts);
  ssm->add_option("-d,--data", data)->required();
  ssm->add_option("-o,--out", out)->required();
  auto* tem = train->add_subcommand("tem", "PU traversability head on top of a trained ssm");
  addConfigOptions(tem, opts);
  tem->add_option("-d,--data", data)->required();
  tem->add_option("-m,--masks", masks)->required();
  tem->add_option("--ssm", ssm_dir, "directory holding ssm.csv")->required();
  tem->add_option("-o,--out", out)->required();
  auto* seg4 = train->add_subcommand("seg4", "four-class segmentation baseline");
  addConfigOptions(seg4, opts);
  seg4->add_option("-d,--data", data)->required();
  seg4->add_option("-m,--masks", masks)->required();
  seg4->add_option("-o,--out", out)->required();

  auto* calibrate = app.add_subcommand("calibrate", "estimate fusion likelihoods");
  addConfigOptions(calibrate, opts);
  calibrate->add_option("--heldout", held_out, "dataset not used for training")->required();
  calibrate->add_option("-d,--data", data, "training dataset")->required();
  calibrate->add_option("-m,--masks", masks)->required();
  calibrate->add_option("--ssm", ssm_dir)->required();
  calibrate->add_option("--tem", tem_dir)->required();
  calibrate->add_option("-o,--out", out)->required();

  auto* eval = app.add_subcommand("eval", "threshold sweep and summary against ground truth");
  addConfigOptions(eval, opts);
  eval->add_option("-d,--data", eval_in.data)->required();
  eval->add_option("--ssm", eval_in.ssm_dir);
  eval->add_option("--tem", eval_in.tem_dir);
  eval->add_option("--seg4", eval_in.seg4_dir);
  eval->add_option("--pred", eval_in.pred_dir, "directory of precomputed frames/NNNNNN.trav.rast");
  eval->add_option("-o,--out", out)->required();

  auto* simulate = app.add_subcommand("simulate", "closed-loop navigation episodes");
  addConfigOptions(simulate, opts);
  simulate->add_option("--ssm", sim_in.ssm_dir);
  simulate->add_option("--tem", sim_in.tem_dir);
  simulate->add_option("--calib", sim_in.calib_dir);
  simulate->add_option("-o,--out", out)->required();

  auto* report = app.add_subcommand("report", "aggregate summary and result CSVs");
  report->add_option("inputs", report_inputs, "run directories")->required();
  report->add_option("-o,--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (world->parsed()) {
      cmdWorld(opts, out);
    } else if (mask_cmd->parsed()) {
      cmdMasks(opts, data, out);
    } else if (ssm->parsed()) {
      cmdTrainSsm(opts, data, out);
    } else if (tem->parsed()) {
      cmdTrainTem(opts, data, masks, ssm_dir, out);
    } else if (seg4->parsed()) {
      cmdTrainSeg4(opts, data, masks, out);
    } else if (calibrate->parsed()) {
      cmdCalibrate(opts, held_out, data, masks, ssm_dir, tem_dir, out);
    } else if (eval->parsed()) {
      cmdEval(opts, eval_in, out);
    } else if (simulate->parsed()) {
      cmdSimulate(opts, sim_in, out);
    } else if (report->parsed()) {
      cmdReport(report_inputs, out);
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: missing or invalid input: " << e.what() << '\n';
    return kMissingInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: configuration: " << e.what() << '\n';
    return kConfig;
  } catch (const FormatError& e) {
    std::cerr << "error: malformed file: " << e.what() << '\n';
    return kFormat;
  } catch (const DegenerateData& e) {
    std::cerr << "error: degenerate training data: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
