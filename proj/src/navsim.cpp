#include "travplant/navsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

namespace travplant {

namespace {

double wrapAngle(double a) {
  a = std::remainder(a, 2 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2 * std::numbers::pi : a;
}

}  // namespace

RobotState stepRobot(const RobotState& state, const Command& cmd, double dt, const VelocityLimits& limits) {
  if (!(dt > 0)) throw InvalidInput("stepRobot: dt must be positive");
  RobotState next;
  next.v = std::clamp(cmd.v, -limits.v_max, limits.v_max);
  next.omega = std::clamp(cmd.omega, -limits.omega_max, limits.omega_max);
  next.pose.x = state.pose.x + next.v * std::cos(state.pose.theta) * dt;
  next.pose.y = state.pose.y + next.v * std::sin(state.pose.theta) * dt;
  next.pose.theta = wrapAngle(state.pose.theta + next.omega * dt);
  return next;
}

bool insideStopBox(const Vec3& point, const Pose2D& pose, const StopBox& box) {
  const double dx = point.x() - pose.x;
  const double dy = point.y() - pose.y;
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double fx = c * dx + s * dy;
  const double fy = -s * dx + c * dy;
  return fx >= 0 && fx <= box.depth && std::abs(fy) <= 0.5 * box.width && point.z() > box.z_min &&
         point.z() <= box.height;
}

Command forwardStopController(std::span<const Vec3> obstacle_cloud, const RobotState& state,
                              const ForwardStopParams& params) {
  for (const Vec3& p : obstacle_cloud)
    if (insideStopBox(p, state.pose, params.box)) return {0.0, 0.0};
  return {params.v_nom, 0.0};
}

Cell Costmap2D::cellOf(const Eigen::Vector2d& p) const {
  return {static_cast<int>(std::floor((p.x() - origin.x()) / resolution)),
          static_cast<int>(std::floor((p.y() - origin.y()) / resolution))};
}

Eigen::Vector2d Costmap2D::cellCenter(const Cell& c) const {
  return origin + resolution * Eigen::Vector2d(c.cx + 0.5, c.cy + 0.5);
}

Costmap2D makeCostmap(const CostmapParams& params) {
  if (!(params.resolution > 0)) throw InvalidInput("costmap: resolution must be positive");
  if (params.width < 1 || params.height < 1) throw InvalidInput("costmap: empty grid");
  Costmap2D map;
  map.origin = params.origin;
  map.resolution = params.resolution;
  map.width = params.width;
  map.height = params.height;
  map.occupied.assign(static_cast<std::size_t>(params.width) * params.height, 0);
  map.inflated = map.occupied;
  return map;
}

void inflate(Costmap2D& map, double radius) {
  map.inflated = map.occupied;
  const int reach = static_cast<int>(std::floor(radius / map.resolution + 1e-9));
  for (int cy = 0; cy < map.height; ++cy)
    for (int cx = 0; cx < map.width; ++cx) {
      if (!map.isOccupied({cx, cy})) continue;
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          const Cell n{cx + dx, cy + dy};
          if (!map.contains(n)) continue;
          if (std::hypot(dx, dy) * map.resolution <= radius + 1e-9) map.inflated[map.index(n)] = 1;
        }
    }
}

Costmap2D buildCostmap(std::span<const Vec3> obstacle_cloud, const CostmapParams& params) {
  Costmap2D map = makeCostmap(params);
  for (const Vec3& p : obstacle_cloud) {
    if (!(p.z() > params.z_min && p.z() <= params.robot_height)) continue;
    const Cell c = map.cellOf(p.head<2>());
    if (map.contains(c)) map.occupied[map.index(c)] = 1;
  }
  inflate(map, params.inflation_radius);
  return map;
}

std::optional<GridPath> planPath(const Costmap2D& map, const Cell& start, const Cell& goal) {
  if (!map.contains(start) || !map.contains(goal)) return std::nullopt;
  if (map.isInflated(goal) && !(goal == start)) return std::nullopt;

  const std::size_t n = map.occupied.size();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  auto heuristic = [&](const Cell& c) {
    const double dx = std::abs(c.cx - goal.cx);
    const double dy = std::abs(c.cy - goal.cy);
    return (std::max(dx, dy) + (std::numbers::sqrt2 - 1) * std::min(dx, dy)) * map.resolution;
  };
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = map.index(start);
  g[s] = 0;
  open.push({heuristic(start), s});
  const std::size_t target = map.index(goal);

  while (!open.empty()) {
    const auto [f, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    if (idx == target) break;
    const Cell c{static_cast<int>(idx % map.width), static_cast<int>(idx / map.width)};
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Cell nb{c.cx + dx, c.cy + dy};
        if (!map.contains(nb) || map.isInflated(nb)) continue;
        const std::size_t ni = map.index(nb);
        const double step = (dx != 0 && dy != 0 ? std::numbers::sqrt2 : 1.0) * map.resolution;
        if (g[idx] + step < g[ni]) {
          g[ni] = g[idx] + step;
          parent[ni] = static_cast<std::int64_t>(idx);
          open.push({g[ni] + heuristic(nb), ni});
        }
      }
  }
  if (!std::isfinite(g[target])) return std::nullopt;

  GridPath path;
  path.length = g[target];
  for (std::int64_t at = static_cast<std::int64_t>(target); at >= 0; at = parent[static_cast<std::size_t>(at)])
    path.cells.push_back({static_cast<int>(at % map.width), static_cast<int>(at / map.width)});
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

PlannerOutput subgoalPlanner(const Costmap2D& map, const RobotState& state, const Eigen::Vector2d& subgoal,
                             const SubgoalPlannerParams& params) {
  PlannerOutput out;
  const Cell start = map.cellOf(Eigen::Vector2d(state.pose.x, state.pose.y));
  out.path = planPath(map, start, map.cellOf(subgoal));
  if (!out.path) {
    out.blocked = true;
    return out;
  }
  const auto& cells = out.path->cells;
  const std::size_t ahead = std::min(cells.size() - 1, static_cast<std::size_t>(std::max(params.lookahead_cells, 1)));
  const Eigen::Vector2d target = ahead == 0 ? subgoal : map.cellCenter(cells[ahead]);
  const double err = wrapAngle(std::atan2(target.y() - state.pose.y, target.x() - state.pose.x) - state.pose.theta);
  out.cmd.omega = params.heading_gain * err;
  out.cmd.v = params.v_nom * std::max(0.0, std::cos(err));
  return out;
}

std::string toString(NavMode m) { return m == NavMode::Baseline ? "baseline" : "proposed"; }
std::string toString(ControllerKind k) { return k == ControllerKind::ForwardStop ? "forward_stop" : "subgoal"; }
std::string toString(Outcome o) {
  switch (o) {
    case Outcome::Traversed: return "traversed";
    case Outcome::Stuck: return "stuck";
    case Outcome::Collision: return "collision";
  }
  return "unknown";
}

RobotRig rigFromScenario(const ScenarioConfig& cfg) {
  return {cfg.intrinsics, cfg.mount, cfg.robot, cfg.ground_clearance};
}

Pose robotPose3d(const Pose2D& p, double ground_clearance) {
  return Pose::FromYaw(p.theta, Vec3(p.x, p.y, ground_clearance));
}

bool collidesWithRigid(const WorldModel& world, const Pose2D& pose, const RobotFootprint& fp, double ground_clearance) {
  const double hl = 0.5 * fp.length;
  const double hw = 0.5 * fp.width;
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const double z_lo = ground_clearance;
  const double z_hi = ground_clearance + fp.height;

  for (const auto& stem : world.stems) {
    if (stem.height < z_lo) continue;
    const double dx = stem.center.x() - pose.x;
    const double dy = stem.center.y() - pose.y;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    const double qx = std::clamp(lx, -hl, hl);
    const double qy = std::clamp(ly, -hw, hw);
    if ((lx - qx) * (lx - qx) + (ly - qy) * (ly - qy) < stem.radius * stem.radius) return true;
  }

  // Separating-axis test between the oriented footprint and each box's xy extent.
  const Eigen::Vector2d center(pose.x, pose.y);
  const Eigen::Vector2d ax(c, s);
  const Eigen::Vector2d ay(-s, c);
  for (const auto& box : world.artificial) {
    if (box.max.z() <= z_lo || box.min.z() >= z_hi) continue;
    const Eigen::Vector2d bmin = box.min.head<2>();
    const Eigen::Vector2d bmax = box.max.head<2>();
    const Eigen::Vector2d bc = 0.5 * (bmin + bmax);
    const Eigen::Vector2d bh = 0.5 * (bmax - bmin);
    bool separated = false;
    for (const Eigen::Vector2d& axis : {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), ax, ay}) {
      const double r_robot = hl * std::abs(axis.dot(ax)) + hw * std::abs(axis.dot(ay));
      const double r_box = bh.x() * std::abs(axis.x()) + bh.y() * std::abs(axis.y());
      if (std::abs(axis.dot(bc - center)) >= r_robot + r_box) {
        separated = true;
        break;
      }
    }
    if (!separated) return true;
  }
  return false;
}

NavEpisodeResult runEpisode(const WorldModel& world, const RobotRig& rig, const NavScenario& scenario,
                            const FusionParams& fusion, const PerceptionModels* models) {
  const NavParams& p = scenario.params;
  const bool proposed = scenario.mode == NavMode::Proposed;
  if (proposed && models == nullptr) throw InvalidInput("runEpisode: proposed mode requires trained models");

  SemanticVoxelMap map(fusion);
  if (proposed) {
    map.setLikelihoods(models->class_likelihood, models->trav_likelihood);
  } else {
    map.setLikelihoods(ClassLikelihood::Uniform(), TravLikelihood::Uniform(10));
  }
  const FreeSpaceRule rule = proposed ? FreeSpaceRule::TraversablePlant : FreeSpaceRule::AllObstacles;

  std::mt19937_64 rng(scenario.render_seed);
  RobotState state;
  state.pose = scenario.start;

  std::vector<Eigen::Vector2d> targets = scenario.subgoals;
  targets.push_back(scenario.goal);
  std::size_t target_idx = 0;

  NavEpisodeResult result;
  auto goalDistance = [&](const RobotState& st) {
    return std::hypot(scenario.goal.x() - st.pose.x, scenario.goal.y() - st.pose.y);
  };
  double best_distance = goalDistance(state);
  double last_progress_time = 0;
  bool was_stopped = false;
  const int max_ticks = static_cast<int>(std::ceil(p.timeout / p.dt));

  for (int tick = 0; tick < max_ticks; ++tick) {
    const double time = tick * p.dt;
    const Pose camera = cameraPose(robotPose3d(state.pose, rig.ground_clearance), rig.mount);
    const Frame frame = renderFrame(world, camera, rig.intrinsics, rng, tick);

    FramePrediction pred;
    if (proposed) {
      pred.class_argmax = predictSsm(frame, models->ssm).argmax;
      pred.traversability = predictTrav(frame, models->ssm, models->tem);
    } else {
      pred.class_argmax = LabelImage::Constant(frame.height(), frame.width(), static_cast<std::uint8_t>(SemanticClass::Ground));
      pred.traversability = ScalarImage::Zero(frame.height(), frame.width());
    }
    map.integrateFrame(frame, pred);
    const std::vector<Vec3> cloud = map.obstacleCloud(rule);

    Command cmd;
    if (scenario.controller == ControllerKind::ForwardStop) {
      cmd = forwardStopController(cloud, state, p.forward_stop);
    } else {
      while (target_idx + 1 < targets.size() &&
             std::hypot(targets[target_idx].x() - state.pose.x, targets[target_idx].y() - state.pose.y) <=
                 p.goal_tolerance)
        ++target_idx;
      const Costmap2D costmap = buildCostmap(cloud, p.costmap);
      cmd = subgoalPlanner(costmap, state, targets[target_idx], p.planner).cmd;
    }

    const bool stopped = cmd.v == 0;
    if (stopped && !was_stopped) ++result.stop_events;
    was_stopped = stopped;

    const RobotState next = stepRobot(state, cmd, p.dt, p.limits);
    result.distance += std::hypot(next.pose.x - state.pose.x, next.pose.y - state.pose.y);
    state = next;
    result.sim_time = time + p.dt;
    result.trace.push_back(
        {tick, result.sim_time, state.pose, cmd, stopped, result.stop_events, map.size(), cloud.size()});

    if (collidesWithRigid(world, state.pose, rig.footprint, rig.ground_clearance)) {
      result.outcome = Outcome::Collision;
      return result;
    }
    const double dist = goalDistance(state);
    if (dist <= p.goal_tolerance) {
      result.outcome = Outcome::Traversed;
      return result;
    }
    if (dist < best_distance - p.progress_epsilon) {
      best_distance = dist;
      last_progress_time = result.sim_time;
    }
    if (result.sim_time - last_progress_time > p.stuck_time) {
      if (p.reset_on_stuck && result.interventions == 0) {
        map.clear();
        ++result.interventions;
        last_progress_time = result.sim_time;
        continue;
      }
      result.outcome = Outcome::Stuck;
      return result;
    }
  }
  result.outcome = Outcome::Stuck;
  return result;
}

}  // namespace travplant
