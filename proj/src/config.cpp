#include "travplant/config.hpp"

#include "travplant/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace travplant {

namespace {

enum class Kind { Real, Int, Seed, Bool, Choice };

struct KeySpec {
  const char* key;
  const char* default_value;
  Kind kind;
  std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& keyTable() {
  static const std::vector<KeySpec> table = {
      {"seed", "1", Kind::Seed},

      {"world.num_rows", "3", Kind::Int},
      {"world.row_length", "7.5", Kind::Real},
      {"world.row_spacing", "1.6", Kind::Real},
      {"world.path_width", "1", Kind::Real},
      {"world.stem_spacing", "0.3", Kind::Real},
      {"world.stem_radius", "0.06", Kind::Real},
      {"world.stem_height", "1.5", Kind::Real},
      {"world.stem_jitter", "0.05", Kind::Real},
      {"world.row_foliage_per_stem", "1", Kind::Int},
      {"world.row_foliage_min_radius", "0.12", Kind::Real},
      {"world.row_foliage_max_radius", "0.22", Kind::Real},
      {"world.overhang_fraction", "0.5", Kind::Real},
      {"world.overhang_segment", "0.6", Kind::Real},
      {"world.overhang_protrusion", "0.45", Kind::Real},
      {"world.overhang_center_height", "0.55", Kind::Real},
      {"world.artificial_per_row", "3", Kind::Int},
      {"world.wall_x", "-1", Kind::Real},

      {"features.dim", "8", Kind::Int},
      {"features.sigma", "1", Kind::Real},
      {"features.separation", "2", Kind::Real},
      {"features.class_separation", "4", Kind::Real},

      {"camera.fx", "40", Kind::Real},
      {"camera.fy", "40", Kind::Real},
      {"camera.cx", "32", Kind::Real},
      {"camera.cy", "24", Kind::Real},
      {"camera.width", "64", Kind::Int},
      {"camera.height", "48", Kind::Int},
      {"mount.forward", "0.3", Kind::Real},
      {"mount.height", "0.8", Kind::Real},
      {"mount.pitch", "0.35", Kind::Real},
      {"sensor.min_range", "0.05", Kind::Real},
      {"sensor.max_range", "5", Kind::Real},

      {"robot.length", "0.6", Kind::Real},
      {"robot.width", "0.4", Kind::Real},
      {"robot.height", "1", Kind::Real},
      {"robot.ground_clearance", "0.1", Kind::Real},
      {"trajectory.spacing", "0.25", Kind::Real},

      {"noise.flip_rate", "0.1", Kind::Real},
      {"noise.void_rate", "0.1", Kind::Real},

      {"train.learning_rate", "0.01", Kind::Real},
      {"train.epochs", "200", Kind::Int},
      {"train.batch_size", "4096", Kind::Int},
      {"train.l2", "0.0001", Kind::Real},
      {"train.samples_per_epoch", "16384", Kind::Int},
      {"train.c_holdout_fraction", "0", Kind::Real},

      {"fusion.voxel_size", "0.1", Kind::Real},
      {"fusion.eviction_frames", "10", Kind::Int},
      {"fusion.max_range", "5", Kind::Real},
      {"fusion.trav_prior", "0.5", Kind::Real},
      {"fusion.free_threshold", "0.75", Kind::Real},
      {"fusion.trav_bins", "10", Kind::Int},

      {"eval.thresholds", "100", Kind::Int},

      {"nav.mode", "both", Kind::Choice, {"baseline", "proposed", "both"}},
      {"nav.controller", "forward_stop", Kind::Choice, {"forward_stop", "subgoal"}},
      {"nav.corridor", "0", Kind::Int},
      {"nav.episodes", "1", Kind::Int},
      {"nav.start_offset", "0.7", Kind::Real},
      {"nav.goal_offset", "0.5", Kind::Real},
      {"nav.subgoal_spacing", "0", Kind::Real},
      {"nav.dt", "0.1", Kind::Real},
      {"nav.v_max", "0.5", Kind::Real},
      {"nav.omega_max", "1", Kind::Real},
      {"nav.v_nom", "0.1", Kind::Real},
      {"nav.stop_depth", "0.8", Kind::Real},
      {"nav.stop_width", "0.6", Kind::Real},
      {"nav.stop_z_min", "0.05", Kind::Real},
      {"nav.stop_height", "1.1", Kind::Real},
      {"nav.goal_tolerance", "0.3", Kind::Real},
      {"nav.stuck_time", "30", Kind::Real},
      {"nav.progress_epsilon", "0.05", Kind::Real},
      {"nav.timeout", "300", Kind::Real},
      {"nav.reset_on_stuck", "false", Kind::Bool},
      {"nav.heading_gain", "1.5", Kind::Real},
      {"nav.lookahead_cells", "4", Kind::Int},
      {"nav.costmap_origin_x", "-1", Kind::Real},
      {"nav.costmap_origin_y", "-1", Kind::Real},
      {"nav.costmap_resolution", "0.05", Kind::Real},
      {"nav.costmap_width", "200", Kind::Int},
      {"nav.costmap_height", "120", Kind::Int},
      {"nav.costmap_z_min", "0.05", Kind::Real},
      {"nav.costmap_robot_height", "1.1", Kind::Real},
      {"nav.inflation_radius", "0.25", Kind::Real},
  };
  return table;
}

const KeySpec* findKey(const std::string& key) {
  for (const auto& spec : keyTable())
    if (key == spec.key) return &spec;
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parsesAs(const std::string& s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void checkValue(const KeySpec& spec, const std::string& value) {
  bool ok = false;
  switch (spec.kind) {
    case Kind::Real: {
      double v = 0;
      ok = parsesAs(value, v) && std::isfinite(v);
      break;
    }
    case Kind::Int: {
      long long v = 0;
      ok = parsesAs(value, v);
      break;
    }
    case Kind::Seed: {
      std::uint64_t v = 0;
      ok = parsesAs(value, v);
      break;
    }
    case Kind::Bool: ok = value == "true" || value == "false"; break;
    case Kind::Choice: ok = std::find(spec.choices.begin(), spec.choices.end(), value) != spec.choices.end(); break;
  }
  if (!ok) throw ConfigError("config: invalid value '" + value + "' for key '" + spec.key + "'");
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& spec : keyTable()) values_[spec.key] = spec.default_value;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      cfg.apply(line);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw InvalidInput("missing config file " + path.string());
  return parse(readText(path));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = findKey(key);
  if (spec == nullptr) throw ConfigError("config: unknown key '" + key + "'");
  checkValue(*spec, value);
  values_[key] = value;
}

void RunConfig::apply(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("config: expected key=value, got '" + trim(assignment) + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
  return it->second;
}

double RunConfig::getDouble(const std::string& key) const { return parseDouble(get(key)); }

long long RunConfig::getInt(const std::string& key) const {
  long long v = 0;
  if (!parsesAs(get(key), v)) throw ConfigError("config: '" + key + "' is not an integer");
  return v;
}

std::uint64_t RunConfig::getSeed() const {
  std::uint64_t v = 0;
  parsesAs(get("seed"), v);
  return v;
}

bool RunConfig::getBool(const std::string& key) const { return get(key) == "true"; }

std::string RunConfig::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::vector<std::string> RunConfig::knownKeys() {
  std::vector<std::string> keys;
  for (const auto& spec : keyTable()) keys.emplace_back(spec.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

ScenarioConfig RunConfig::scenario() const {
  ScenarioConfig c;
  c.seed = getSeed();
  c.num_rows = static_cast<int>(getInt("world.num_rows"));
  c.row_length = getDouble("world.row_length");
  c.row_spacing = getDouble("world.row_spacing");
  c.path_width = getDouble("world.path_width");
  c.stem_spacing = getDouble("world.stem_spacing");
  c.stem_radius = getDouble("world.stem_radius");
  c.stem_height = getDouble("world.stem_height");
  c.stem_jitter = getDouble("world.stem_jitter");
  c.row_foliage_per_stem = static_cast<int>(getInt("world.row_foliage_per_stem"));
  c.row_foliage_min_radius = getDouble("world.row_foliage_min_radius");
  c.row_foliage_max_radius = getDouble("world.row_foliage_max_radius");
  c.overhang_fraction = getDouble("world.overhang_fraction");
  c.overhang_segment = getDouble("world.overhang_segment");
  c.overhang_protrusion = getDouble("world.overhang_protrusion");
  c.overhang_center_height = getDouble("world.overhang_center_height");
  c.artificial_per_row = static_cast<int>(getInt("world.artificial_per_row"));
  c.wall_x = getDouble("world.wall_x");
  c.feature_dim = static_cast<int>(getInt("features.dim"));
  c.feature_sigma = getDouble("features.sigma");
  c.feature_separation = getDouble("features.separation");
  c.class_separation = getDouble("features.class_separation");
  c.intrinsics.fx = getDouble("camera.fx");
  c.intrinsics.fy = getDouble("camera.fy");
  c.intrinsics.cx = getDouble("camera.cx");
  c.intrinsics.cy = getDouble("camera.cy");
  c.intrinsics.width = static_cast<int>(getInt("camera.width"));
  c.intrinsics.height = static_cast<int>(getInt("camera.height"));
  c.mount.forward = getDouble("mount.forward");
  c.mount.height = getDouble("mount.height");
  c.mount.pitch = getDouble("mount.pitch");
  c.min_range = getDouble("sensor.min_range");
  c.max_range = getDouble("sensor.max_range");
  c.robot.length = getDouble("robot.length");
  c.robot.width = getDouble("robot.width");
  c.robot.height = getDouble("robot.height");
  c.ground_clearance = getDouble("robot.ground_clearance");
  c.trajectory_spacing = getDouble("trajectory.spacing");
  validate(c);
  return c;
}

TrainHyper RunConfig::trainHyper() const {
  TrainHyper h;
  h.learning_rate = getDouble("train.learning_rate");
  h.epochs = static_cast<int>(getInt("train.epochs"));
  h.batch_size = static_cast<int>(getInt("train.batch_size"));
  h.l2 = getDouble("train.l2");
  h.samples_per_epoch = static_cast<int>(getInt("train.samples_per_epoch"));
  h.validate();
  return h;
}

TemOptions RunConfig::temOptions() const {
  TemOptions o;
  o.c_holdout_fraction = getDouble("train.c_holdout_fraction");
  if (o.c_holdout_fraction < 0 || o.c_holdout_fraction >= 1)
    throw ConfigError("config: train.c_holdout_fraction must lie in [0,1)");
  return o;
}

PseudoLabelNoise RunConfig::noise() const {
  PseudoLabelNoise n;
  n.flip_rate = getDouble("noise.flip_rate");
  n.void_rate = getDouble("noise.void_rate");
  n.validate();
  return n;
}

FusionParams RunConfig::fusion() const {
  FusionParams f;
  f.voxel_size = getDouble("fusion.voxel_size");
  f.eviction_frames = static_cast<int>(getInt("fusion.eviction_frames"));
  f.max_range = getDouble("fusion.max_range");
  f.trav_prior = getDouble("fusion.trav_prior");
  f.free_threshold = getDouble("fusion.free_threshold");
  f.validate();
  return f;
}

int RunConfig::travBins() const {
  const auto b = getInt("fusion.trav_bins");
  if (b < 1 || b > 1000) throw ConfigError("config: fusion.trav_bins must lie in [1,1000]");
  return static_cast<int>(b);
}

int RunConfig::thresholdCount() const {
  const auto n = getInt("eval.thresholds");
  if (n < 1 || n > 100000) throw ConfigError("config: eval.thresholds must lie in [1,100000]");
  return static_cast<int>(n);
}

NavParams RunConfig::navParams() const {
  NavParams p;
  p.dt = getDouble("nav.dt");
  p.limits.v_max = getDouble("nav.v_max");
  p.limits.omega_max = getDouble("nav.omega_max");
  p.forward_stop.v_nom = getDouble("nav.v_nom");
  p.forward_stop.box.depth = getDouble("nav.stop_depth");
  p.forward_stop.box.width = getDouble("nav.stop_width");
  p.forward_stop.box.z_min = getDouble("nav.stop_z_min");
  p.forward_stop.box.height = getDouble("nav.stop_height");
  p.planner.v_nom = p.forward_stop.v_nom;
  p.planner.heading_gain = getDouble("nav.heading_gain");
  p.planner.lookahead_cells = static_cast<int>(getInt("nav.lookahead_cells"));
  p.costmap.origin = Eigen::Vector2d(getDouble("nav.costmap_origin_x"), getDouble("nav.costmap_origin_y"));
  p.costmap.resolution = getDouble("nav.costmap_resolution");
  p.costmap.width = static_cast<int>(getInt("nav.costmap_width"));
  p.costmap.height = static_cast<int>(getInt("nav.costmap_height"));
  p.costmap.z_min = getDouble("nav.costmap_z_min");
  p.costmap.robot_height = getDouble("nav.costmap_robot_height");
  p.costmap.inflation_radius = getDouble("nav.inflation_radius");
  p.goal_tolerance = getDouble("nav.goal_tolerance");
  p.stuck_time = getDouble("nav.stuck_time");
  p.progress_epsilon = getDouble("nav.progress_epsilon");
  p.timeout = getDouble("nav.timeout");
  p.reset_on_stuck = getBool("nav.reset_on_stuck");
  if (!(p.dt > 0) || !(p.timeout > 0) || !(p.stuck_time > 0)) throw ConfigError("config: nav timing must be positive");
  if (!(p.limits.v_max > 0) || !(p.limits.omega_max > 0) || p.forward_stop.v_nom < 0 ||
      p.forward_stop.v_nom > p.limits.v_max)
    throw ConfigError("config: nav velocities must satisfy 0 <= v_nom <= v_max");
  if (!(p.costmap.resolution > 0) || p.costmap.width < 1 || p.costmap.height < 1)
    throw ConfigError("config: costmap shape must be positive");
  if (p.planner.lookahead_cells < 1) throw ConfigError("config: nav.lookahead_cells must be >= 1");
  return p;
}

}  // namespace travplant
