#ifndef TRAVPLANT_NAVSIM_HPP
#define TRAVPLANT_NAVSIM_HPP

#include "travplant/pixelnet.hpp"
#include "travplant/robot.hpp"
#include "travplant/synthworld.hpp"
#include "travplant/voxelfusion.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace travplant {

struct Pose2D {
  double x = 0;
  double y = 0;
  double theta = 0;
};

struct Command {
  double v = 0;
  double omega = 0;
};

struct RobotState {
  Pose2D pose;
  double v = 0;
  double omega = 0;
};

struct VelocityLimits {
  double v_max = 0.5;
  double omega_max = 1.0;
};

/// Unicycle integration with commands clamped to the limits.
RobotState stepRobot(const RobotState& state, const Command& cmd, double dt, const VelocityLimits& limits = {});

/// Robot-frame region ahead of the robot origin: x in [0, depth], |y| <= width / 2,
/// world z in (z_min, height].
struct StopBox {
  double depth = 0.8;
  double width = 0.6;
  double z_min = 0.05;
  double height = 1.1;
};

struct ForwardStopParams {
  double v_nom = 0.1;
  StopBox box;
};

bool insideStopBox(const Vec3& point, const Pose2D& pose, const StopBox& box);

/// (v_nom, 0) unless an obstacle point lies inside the stop box.
Command forwardStopController(std::span<const Vec3> obstacle_cloud, const RobotState& state,
                              const ForwardStopParams& params);

struct CostmapParams {
  Eigen::Vector2d origin = Eigen::Vector2d(-1.0, -1.0);
  double resolution = 0.05;
  int width = 200;
  int height = 120;
  double z_min = 0.05;
  double robot_height = 1.1;
  double inflation_radius = 0.25;
};

struct Cell {
  int cx = 0;
  int cy = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Costmap2D {
  Eigen::Vector2d origin;
  double resolution = 0.05;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> occupied;
  std::vector<std::uint8_t> inflated;  // superset of occupied

  bool contains(const Cell& c) const { return c.cx >= 0 && c.cy >= 0 && c.cx < width && c.cy < height; }
  std::size_t index(const Cell& c) const { return static_cast<std::size_t>(c.cy) * width + c.cx; }
  bool isOccupied(const Cell& c) const { return occupied[index(c)] != 0; }
  bool isInflated(const Cell& c) const { return inflated[index(c)] != 0; }
  Cell cellOf(const Eigen::Vector2d& p) const;
  Eigen::Vector2d cellCenter(const Cell& c) const;
};

/// Empty costmap of the given shape.
Costmap2D makeCostmap(const CostmapParams& params);

/// Marks cells holding points with z in (z_min, robot_height] and inflates them.
Costmap2D buildCostmap(std::span<const Vec3> obstacle_cloud, const CostmapParams& params);

/// Marks every cell whose center lies within `radius` of an occupied cell center.
void inflate(Costmap2D& map, double radius);

struct GridPath {
  std::vector<Cell> cells;
  double length = 0;  // metres
};

/// Shortest 8-connected path over non-inflated cells (the start cell is always
/// admissible). Empty when the goal is unreachable.
std::optional<GridPath> planPath(const Costmap2D& map, const Cell& start, const Cell& goal);

struct SubgoalPlannerParams {
  double v_nom = 0.1;
  double heading_gain = 1.5;
  int lookahead_cells = 4;
};

struct PlannerOutput {
  Command cmd;
  bool blocked = false;
  std::optional<GridPath> path;
};

PlannerOutput subgoalPlanner(const Costmap2D& map, const RobotState& state, const Eigen::Vector2d& subgoal,
                             const SubgoalPlannerParams& params);

enum class NavMode { Baseline, Proposed };
enum class ControllerKind { ForwardStop, Subgoal };
enum class Outcome { Traversed, Stuck, Collision };

std::string toString(NavMode m);
std::string toString(ControllerKind k);
std::string toString(Outcome o);

struct NavParams {
  double dt = 0.1;
  VelocityLimits limits;
  ForwardStopParams forward_stop;
  SubgoalPlannerParams planner;
  CostmapParams costmap;
  double goal_tolerance = 0.3;
  double stuck_time = 30.0;
  double progress_epsilon = 0.05;
  double timeout = 300.0;
  bool reset_on_stuck = false;
};

struct NavScenario {
  Pose2D start;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> subgoals;  // visited in order before `goal`
  NavMode mode = NavMode::Proposed;
  ControllerKind controller = ControllerKind::ForwardStop;
  NavParams params;
  std::uint64_t render_seed = 0;
};

/// Trained networks and calibrated likelihoods for the proposed mode.
struct PerceptionModels {
  SoftmaxClassifier ssm;
  PuClassifier tem;
  ClassLikelihood class_likelihood;
  TravLikelihood trav_likelihood;
};

/// Sensor and body description shared with data collection.
struct RobotRig {
  CameraIntrinsics intrinsics;
  CameraMount mount;
  RobotFootprint footprint;
  double ground_clearance = 0.1;
};

RobotRig rigFromScenario(const ScenarioConfig& cfg);

Pose robotPose3d(const Pose2D& p, double ground_clearance);

/// True when the footprint at `pose` overlaps a stem or an artificial box.
bool collidesWithRigid(const WorldModel& world, const Pose2D& pose, const RobotFootprint& fp, double ground_clearance);

struct TraceRow {
  int tick = 0;
  double time = 0;
  Pose2D pose;
  Command cmd;
  bool stopped = false;
  int stop_events = 0;
  std::size_t map_size = 0;
  std::size_t obstacle_points = 0;
};

struct NavEpisodeResult {
  Outcome outcome = Outcome::Stuck;
  double distance = 0;
  double sim_time = 0;
  int stop_events = 0;
  int interventions = 0;
  std::vector<TraceRow> trace;
};

NavEpisodeResult runEpisode(const WorldModel& world, const RobotRig& rig, const NavScenario& scenario,
                            const FusionParams& fusion, const PerceptionModels* models);

}  // namespace travplant

#endif  // TRAVPLANT_NAVSIM_HPP
