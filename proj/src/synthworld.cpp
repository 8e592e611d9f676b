#include "travplant/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace travplant {

namespace {

/// Half-width of the plant band on either side of a row line.
double rowBandHalfWidth(const ScenarioConfig& cfg) { return 0.5 * (cfg.row_spacing - cfg.path_width); }

struct OverhangShape {
  double radius;
  double edge_offset;  // center distance beyond the corridor edge, negative = inside the corridor
};

/// Sphere whose chord through the corridor edge plane spans exactly one segment
/// and which reaches `protrusion` into the corridor.
OverhangShape overhangShape(double segment, double protrusion) {
  const double half = 0.5 * segment;
  const double sum = half * half / protrusion;  // r + d
  return {0.5 * (protrusion + sum), 0.5 * (sum - protrusion)};
}

int segmentCount(const ScenarioConfig& cfg) {
  return std::max(1, static_cast<int>(std::lround(cfg.row_length / cfg.overhang_segment)));
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& what) { throw ConfigError("scenario: " + what); };
  if (cfg.num_rows < 2) fail("num_rows must be >= 2");
  if (!(cfg.row_length >= 0)) fail("row_length must be >= 0");
  if (!(cfg.path_width > 0)) fail("path_width must be positive");
  if (!cfg.robot.isValid()) fail("robot dimensions must be positive");
  if (cfg.path_width <= cfg.robot.width) fail("path_width must exceed robot width");
  if (cfg.row_spacing <= cfg.path_width) fail("row_spacing must exceed path_width");
  if (!(cfg.stem_spacing > 0) || !(cfg.stem_radius > 0) || !(cfg.stem_height > 0)) fail("stem geometry must be positive");
  if (cfg.stem_radius + cfg.stem_jitter >= rowBandHalfWidth(cfg)) fail("stems do not fit inside the row band");
  if (cfg.row_foliage_per_stem < 0) fail("row_foliage_per_stem must be >= 0");
  if (!(cfg.row_foliage_min_radius > 0) || cfg.row_foliage_max_radius < cfg.row_foliage_min_radius)
    fail("row foliage radii must satisfy 0 < min <= max");
  if (cfg.row_foliage_max_radius > rowBandHalfWidth(cfg)) fail("row foliage does not fit inside the row band");
  if (cfg.overhang_fraction < 0 || cfg.overhang_fraction > 1) fail("overhang_fraction must lie in [0,1]");
  if (!(cfg.overhang_segment > 0)) fail("overhang_segment must be positive");
  if (!(cfg.overhang_protrusion > 0) || cfg.overhang_protrusion >= cfg.path_width)
    fail("overhang_protrusion must lie in (0, path_width)");
  if (cfg.overhang_center_height < 0 || cfg.overhang_center_height > cfg.robot.height)
    fail("overhang_center_height must lie within the robot height");
  if (cfg.artificial_per_row < 0) fail("artificial_per_row must be >= 0");
  if (cfg.feature_dim < 4) fail("feature_dim must be >= 4");
  if (!(cfg.feature_sigma > 0)) fail("feature_sigma must be positive");
  if (cfg.feature_separation < 0) fail("feature_separation must be >= 0");
  if (cfg.class_separation < 0) fail("class_separation must be >= 0");
  if (!cfg.intrinsics.isValid()) fail("invalid camera intrinsics");
  if (!(cfg.min_range >= 0) || !(cfg.max_range > cfg.min_range)) fail("invalid sensor range");
  if (!(cfg.trajectory_spacing > 0)) fail("trajectory_spacing must be positive");
  if (cfg.ground_clearance < 0) fail("ground_clearance must be >= 0");
}

FeatureModel makeFeatureModel(int dim, double sigma, double feature_separation, double class_separation) {
  FeatureModel m;
  m.sigma = sigma;
  m.means = Eigen::MatrixXd::Zero(4, dim);
  m.means(static_cast<int>(SurfaceKind::Stem), 0) = class_separation;
  m.means(static_cast<int>(SurfaceKind::Foliage), 0) = class_separation;
  m.means(static_cast<int>(SurfaceKind::Foliage), 1) = feature_separation;
  m.means(static_cast<int>(SurfaceKind::Artificial), 2) = class_separation;
  m.means(static_cast<int>(SurfaceKind::Ground), 3) = class_separation;
  return m;
}

const Corridor& WorldModel::corridor(int id) const {
  for (const auto& c : corridors)
    if (c.id == id) return c;
  throw InvalidInput("unknown corridor id " + std::to_string(id));
}

WorldModel buildWorld(const ScenarioConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  WorldModel w;
  w.seed = cfg.seed;
  w.min_range = cfg.min_range;
  w.max_range = cfg.max_range;
  w.features = makeFeatureModel(cfg.feature_dim, cfg.feature_sigma, cfg.feature_separation, cfg.class_separation);

  const double band = rowBandHalfWidth(cfg);
  const double half_path = 0.5 * cfg.path_width;

  for (int r = 0; r < cfg.num_rows; ++r) {
    const double row_y = r * cfg.row_spacing;
    const int n_stems = static_cast<int>(std::floor(cfg.row_length / cfg.stem_spacing));
    for (int s = 0; s < n_stems; ++s) {
      const double x = (s + 0.5) * cfg.stem_spacing + uniform(-cfg.stem_jitter, cfg.stem_jitter);
      const double y = row_y + uniform(-cfg.stem_jitter, cfg.stem_jitter);
      w.stems.push_back({Eigen::Vector2d(x, y), cfg.stem_radius, cfg.stem_height});
      for (int f = 0; f < cfg.row_foliage_per_stem; ++f) {
        const double radius = uniform(cfg.row_foliage_min_radius, cfg.row_foliage_max_radius);
        const double slack = band - radius - 1e-6;
        const double z_lo = radius + 0.05;
        const double z_hi = std::max(z_lo, cfg.stem_height - 0.1);
        w.foliage.push_back({Vec3(x + uniform(-0.1, 0.1), row_y + uniform(-slack, slack), uniform(z_lo, z_hi)), radius});
      }
    }
    for (int a = 0; a < cfg.artificial_per_row; ++a) {
      const double hs = 0.05;
      const double x = uniform(0.0, cfg.row_length);
      const double y = row_y + uniform(-(band - hs), band - hs);
      const double h = uniform(1.6, 2.0);
      w.artificial.push_back({Vec3(x - hs, y - hs, 0), Vec3(x + hs, y + hs, h)});
    }
  }

  const OverhangShape shape = overhangShape(cfg.row_length / segmentCount(cfg), cfg.overhang_protrusion);
  const int n_seg = segmentCount(cfg);
  const double seg_len = cfg.row_length / n_seg;
  for (int k = 0; k + 1 < cfg.num_rows; ++k) {
    Corridor c{k, (k + 0.5) * cfg.row_spacing, 0.0, cfg.row_length, half_path};
    w.corridors.push_back(c);

    std::vector<int> order(n_seg);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const int n_blocked = static_cast<int>(std::lround(cfg.overhang_fraction * n_seg));
    std::vector<int> blocked(order.begin(), order.begin() + n_blocked);
    std::sort(blocked.begin(), blocked.end());
    for (int seg : blocked) {
      const double side = uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      const double x = (seg + 0.5) * seg_len;
      const double y = c.y_center + side * (half_path + shape.edge_offset);
      w.foliage.push_back({Vec3(x, y, cfg.overhang_center_height), shape.radius});
    }

    if (cfg.wall_x >= 0) {
      w.artificial.push_back(
          {Vec3(cfg.wall_x, c.y_center - half_path, 0), Vec3(cfg.wall_x + 0.1, c.y_center + half_path, 1.2)});
    }
  }

  w.bounds_min = Vec3(-1.0, -cfg.row_spacing, 0.0);
  w.bounds_max = Vec3(cfg.row_length + 1.0, cfg.num_rows * cfg.row_spacing, 2.5);
  return w;
}

std::optional<double> intersectGround(const Vec3& o, const Vec3& d, double t_min) {
  if (!(d.z() < 0) || o.z() < 0) return std::nullopt;
  const double t = -o.z() / d.z();
  if (t > t_min) return t;
  return std::nullopt;
}

std::optional<double> intersectSphere(const Sphere& s, const Vec3& o, const Vec3& d, double t_min) {
  const Vec3 oc = o - s.center;
  const double a = d.squaredNorm();
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t1 = (-b - sq) / a;
  if (t1 > t_min) return t1;
  const double t2 = (-b + sq) / a;
  if (t2 > t_min) return t2;
  return std::nullopt;
}

std::optional<double> intersectCylinder(const Cylinder& cyl, const Vec3& o, const Vec3& d, double t_min) {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > t_min && (!best || t < *best)) best = t;
  };
  const Eigen::Vector2d oxy = o.head<2>() - cyl.center;
  const Eigen::Vector2d dxy = d.head<2>();
  const double a = dxy.squaredNorm();
  if (a > 0) {
    const double b = oxy.dot(dxy);
    const double c = oxy.squaredNorm() - cyl.radius * cyl.radius;
    const double disc = b * b - a * c;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / a, (-b + sq) / a}) {
        const double z = o.z() + t * d.z();
        if (z >= 0 && z <= cyl.height) consider(t);
      }
    }
  }
  if (d.z() != 0) {
    const double t = (cyl.height - o.z()) / d.z();
    if ((oxy + t * dxy).squaredNorm() <= cyl.radius * cyl.radius) consider(t);
  }
  return best;
}

std::optional<double> intersectBox(const Box& b, const Vec3& o, const Vec3& d, double t_min) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d(i) == 0) {
      if (o(i) < b.min(i) || o(i) > b.max(i)) return std::nullopt;
      continue;
    }
    double t0 = (b.min(i) - o(i)) / d(i);
    double t1 = (b.max(i) - o(i)) / d(i);
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_exit < t_enter) return std::nullopt;
  if (t_enter > t_min) return t_enter;
  if (t_exit > t_min) return t_exit;
  return std::nullopt;
}

namespace {

/// Primitives that can be hit within range from one viewpoint.
struct Candidates {
  std::vector<const Cylinder*> stems;
  std::vector<const Sphere*> foliage;
  std::vector<const Box*> artificial;
};

Candidates allPrimitives(const WorldModel& w) {
  Candidates c;
  for (const auto& s : w.stems) c.stems.push_back(&s);
  for (const auto& s : w.foliage) c.foliage.push_back(&s);
  for (const auto& b : w.artificial) c.artificial.push_back(&b);
  return c;
}

/// Drops primitives whose bounding sphere lies beyond `reach` from `origin`
/// or entirely behind the image plane.
Candidates cull(const WorldModel& w, const Vec3& origin, const Vec3& forward, double reach) {
  Candidates c;
  auto keep = [&](const Vec3& center, double radius) {
    const Vec3 rel = center - origin;
    return rel.norm() - radius <= reach && rel.dot(forward) >= -radius;
  };
  for (const auto& s : w.stems) {
    const Vec3 center(s.center.x(), s.center.y(), 0.5 * s.height);
    if (keep(center, std::hypot(s.radius, 0.5 * s.height))) c.stems.push_back(&s);
  }
  for (const auto& s : w.foliage)
    if (keep(s.center, s.radius)) c.foliage.push_back(&s);
  for (const auto& b : w.artificial)
    if (keep(0.5 * (b.min + b.max), 0.5 * (b.max - b.min).norm())) c.artificial.push_back(&b);
  return c;
}

std::optional<RayHit> castAgainst(const Candidates& c, const Vec3& o, const Vec3& d, double t_min, double t_max) {
  std::optional<RayHit> best;
  auto consider = [&](std::optional<double> t, SurfaceKind kind) {
    if (t && *t <= t_max && (!best || *t < best->t)) best = RayHit{*t, kind};
  };
  consider(intersectGround(o, d, t_min), SurfaceKind::Ground);
  for (const auto* s : c.stems) consider(intersectCylinder(*s, o, d, t_min), SurfaceKind::Stem);
  for (const auto* s : c.foliage) consider(intersectSphere(*s, o, d, t_min), SurfaceKind::Foliage);
  for (const auto* b : c.artificial) consider(intersectBox(*b, o, d, t_min), SurfaceKind::Artificial);
  return best;
}

}  // namespace

std::optional<RayHit> castRay(const WorldModel& world, const Vec3& origin, const Vec3& dir, double t_min,
                              double t_max) {
  return castAgainst(allPrimitives(world), origin, dir, t_min, t_max);
}

Frame renderFrame(const WorldModel& world, const Pose& camera_pose, const CameraIntrinsics& intr,
                  std::mt19937_64& rng, int frame_id) {
  const int H = intr.height;
  const int W = intr.width;
  const int F = world.features.dim();

  Frame f;
  f.frame_id = frame_id;
  f.pose = camera_pose;
  f.intr = intr;
  f.features = PixelMatrix<float>::Zero(static_cast<Eigen::Index>(H) * W, F);
  f.depth = DepthImage::Zero(H, W);
  f.gt_class = LabelImage::Constant(H, W, kVoidLabel);
  f.gt_trav = MaskImage::Zero(H, W);

  // Dirs have unit optical-axis component, so the ray parameter equals depth.
  const double corner = std::hypot(std::max(intr.cx, W - intr.cx) / intr.fx, std::max(intr.cy, H - intr.cy) / intr.fy);
  const double reach = world.max_range * std::sqrt(1.0 + corner * corner);
  const Vec3 origin = camera_pose.translation;
  const Candidates cand = cull(world, origin, camera_pose.rotation.col(2), reach);

  std::normal_distribution<double> noise(0.0, 1.0);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const Vec3 dir_cam((u + 0.5 - intr.cx) / intr.fx, (v + 0.5 - intr.cy) / intr.fy, 1.0);
      const Vec3 dir = camera_pose.rotation * dir_cam;
      const auto hit = castAgainst(cand, origin, dir, world.min_range, world.max_range);
      if (!hit) continue;
      const Eigen::Index idx = static_cast<Eigen::Index>(v) * W + u;
      f.depth(v, u) = static_cast<float>(hit->t);
      f.gt_class(v, u) = static_cast<std::uint8_t>(classOf(hit->kind));
      f.gt_trav(v, u) = isTraversable(hit->kind) ? 1 : 0;
      const int k = static_cast<int>(hit->kind);
      for (int j = 0; j < F; ++j)
        f.features(idx, j) = static_cast<float>(world.features.means(k, j) + world.features.sigma * noise(rng));
    }
  }
  return f;
}

std::vector<Pose> scriptTrajectory(const WorldModel& world, const PathSpec& spec, double ground_clearance) {
  const Corridor& c = world.corridor(spec.corridor_id);
  if (!(spec.spacing > 0)) throw InvalidInput("trajectory spacing must be positive");
  const double start = spec.start_x.value_or(c.x_start);
  const double end = spec.end_x.value_or(c.x_end);
  if (end < start) throw InvalidInput("trajectory end precedes start");
  const int n = static_cast<int>(std::floor((end - start) / spec.spacing + 1e-9));
  std::vector<Pose> poses;
  poses.reserve(n + 1);
  for (int i = 0; i <= n; ++i)
    poses.push_back(Pose::FromYaw(0.0, Vec3(start + i * spec.spacing, c.y_center, ground_clearance)));
  return poses;
}

double corridorBlockedFraction(const WorldModel& world, int corridor_id, double robot_height, int samples) {
  const Corridor& c = world.corridor(corridor_id);
  const double y_lo = c.y_center - c.half_width;
  const double y_hi = c.y_center + c.half_width;
  int blocked = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = c.x_start + (i + 0.5) / samples * (c.x_end - c.x_start);
    for (const auto& s : world.foliage) {
      const double dx = x - s.center.x();
      const double r2 = s.radius * s.radius - dx * dx;
      if (r2 <= 0) continue;
      const double qy = std::clamp(s.center.y(), y_lo, y_hi);
      const double qz = std::clamp(s.center.z(), 0.0, robot_height);
      const double dist2 = (qy - s.center.y()) * (qy - s.center.y()) + (qz - s.center.z()) * (qz - s.center.z());
      if (dist2 < r2) {
        ++blocked;
        break;
      }
    }
  }
  return static_cast<double>(blocked) / samples;
}

}  // namespace travplant
