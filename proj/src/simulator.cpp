#include "skf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "skf/random.hpp"

namespace skf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
// Noise floor for factor weights when the scenario is noise-free.
constexpr double kMinLidarSigma = 1e-4;
constexpr double kMinPixelSigma = 1e-6;

enum Stream : std::uint32_t {
  kMotion = 1,
  kLinPose = 2,
  kRayDir = 3,
  kRange = 4,
  kNormalX = 5,
  kNormalY = 6,
  kNormalZ = 7,
  kPixelU = 8,
  kPixelV = 9,
  kRayDirV = 10,
};

struct Hit {
  double range = std::numeric_limits<double>::infinity();
  const Plane* plane = nullptr;
};

Hit cast_ray(const Scene& scene, const Vec3& origin, const Vec3& dir, double max_range) {
  Hit best;
  for (const auto& p : scene.planes) {
    if (!p.enabled) continue;
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double s = (p.offset - p.normal.dot(origin)) / denom;
    if (s <= 1e-6 || s > max_range || s >= best.range) continue;
    const Vec3 q = origin + s * dir - p.center;
    if (std::abs(q.dot(p.u_axis)) > p.half_u || std::abs(q.dot(p.v_axis())) > p.half_v) continue;
    best.range = s;
    best.plane = &p;
  }
  return best;
}

std::vector<double> frame_times(const ScenarioSpec& spec) {
  const double t0 = spec.trajectory.front().t;
  const double t1 = spec.trajectory.back().t;
  std::vector<double> ts;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) / spec.lidar_rate;
    if (t > t1 + 1e-9) break;
    ts.push_back(std::min(t, t1));
  }
  return ts;
}

bool camera_in_frame(const ScenarioSpec& spec, const std::vector<double>& ts, std::size_t k) {
  if (k == 0) return true;
  const double t0 = spec.trajectory.front().t;
  const auto slot = [&](double t) { return std::floor((t - t0) * spec.cam_rate + 1e-9); };
  return slot(ts[k]) > slot(ts[k - 1]);
}

TraceFrame generate_frame(const ScenarioSpec& spec, const CounterRng& rng,
                          const std::vector<double>& ts, std::size_t k) {
  TraceFrame fr;
  fr.index = k;
  fr.t = ts[k];
  fr.truth = interpolate(spec.trajectory, fr.t);

  if (k > 0) {
    const Pose prev = interpolate(spec.trajectory, ts[k - 1]);
    Vec6 d = boxminus(fr.truth, prev).delta;
    for (std::uint32_t i = 0; i < 6; ++i) {
      const double s = i < 3 ? spec.motion_rot_sigma : spec.motion_trans_sigma;
      d(i) += s * rng.normal(k, i, kMotion);
    }
    fr.motion_delta = ErrorState(d);
  }
  {
    Vec6 e;
    for (std::uint32_t i = 0; i < 6; ++i) {
      const double s = i < 3 ? spec.motion_rot_sigma : spec.motion_trans_sigma;
      e(i) = s * rng.normal(k, i, kLinPose);
    }
    fr.lin_pose = boxplus(fr.truth, ErrorState(e));
  }

  const Mat3& rot = fr.truth.rotation();
  const Vec3& origin = fr.truth.translation();
  const double hfov = spec.fov_h_deg * kDeg;
  const double vfov = spec.fov_v_deg * kDeg;
  const double sigma_w = std::max(spec.lidar_sigma, kMinLidarSigma);

  fr.lidar_factors.reserve(static_cast<std::size_t>(spec.points_per_frame));
  for (int ii = 0; ii < spec.points_per_frame; ++ii) {
    const auto i = static_cast<std::uint32_t>(ii);
    const double az = (rng.uniform(k, i, kRayDir) - 0.5) * hfov;
    const double el = (rng.uniform(k, i, kRayDirV) - 0.5) * vfov;
    const Vec3 dir_b(std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el));
    const Vec3 dir_w = rot * dir_b;
    const Hit hit = cast_ray(spec.scene, origin, dir_w, spec.max_range);
    if (hit.plane == nullptr) continue;
    const Vec3& n = hit.plane->normal;
    const double cosi = std::abs(n.dot(dir_w));
    if (cosi < spec.min_incidence) continue;

    // Range noise scaled so the point-to-plane residual has sigma lidar_sigma.
    const double range = hit.range + (spec.lidar_sigma / cosi) * rng.normal(k, i, kRange);
    const Vec3 q_true = origin + hit.range * dir_w;

    Vec3 g(rng.normal(k, i, kNormalX), rng.normal(k, i, kNormalY), rng.normal(k, i, kNormalZ));
    g = spec.normal_sigma * (g - g.dot(n) * n);
    const Vec3 n_fit = (n + g).normalized();

    PointPlaneFactor f;
    f.point_body = range * dir_b;
    f.plane_normal = n_fit;
    f.plane_offset = n_fit.dot(q_true);
    f.noise_sigma = sigma_w;
    fr.lidar_factors.push_back(f);
  }

  fr.camera = camera_in_frame(spec, ts, k);
  if (fr.camera) {
    const double pix_w = std::max(spec.pixel_sigma, kMinPixelSigma);
    for (std::size_t j = 0; j < spec.scene.landmarks.size(); ++j) {
      const Vec3 pc = fr.truth.inverse_transform(spec.scene.landmarks[j]);
      if (pc.z() < spec.min_landmark_depth || pc.norm() > spec.max_range) continue;
      if (std::abs(std::atan2(pc.x(), pc.z())) > 0.5 * hfov ||
          std::abs(std::atan2(pc.y(), pc.z())) > 0.5 * vfov) {
        continue;
      }
      const auto jj = static_cast<std::uint32_t>(j);
      VisualFactor v;
      v.landmark_world = spec.scene.landmarks[j];
      v.pixel_obs = Vec2(pc.x() / pc.z() + spec.pixel_sigma * rng.normal(k, jj, kPixelU),
                         pc.y() / pc.z() + spec.pixel_sigma * rng.normal(k, jj, kPixelV));
      v.noise_sigma = pix_w;
      fr.visual_factors.push_back(v);
    }
  }
  relinearize_at_lin_pose(fr);
  return fr;
}

ScenarioTrace trace_header(const ScenarioSpec& spec) {
  ScenarioTrace trace;
  trace.name = spec.name;
  trace.seed = spec.seed;
  trace.lidar_sigma = spec.lidar_sigma;
  trace.motion_rot_sigma = spec.motion_rot_sigma;
  trace.motion_trans_sigma = spec.motion_trans_sigma;
  return trace;
}

void sample_rect(std::vector<Vec3>& out, const Vec3& center, const Vec3& u, const Vec3& v,
                 double half_u, double half_v, int count, std::uint32_t stream) {
  const CounterRng rng(0x6c616e646d61726bULL);
  for (int i = 0; i < count; ++i) {
    const auto ii = static_cast<std::uint32_t>(i);
    const double a = (2.0 * rng.uniform(stream, ii, 0) - 1.0) * half_u;
    const double b = (2.0 * rng.uniform(stream, ii, 1) - 1.0) * half_v;
    out.push_back(center + a * u + b * v);
  }
}

Plane make_plane(const Vec3& normal, double offset, const Vec3& center, const Vec3& u,
                 double half_u, double half_v, std::string group = {}) {
  Plane p;
  p.normal = normal.normalized();
  p.offset = offset;
  p.center = center;
  p.u_axis = u.normalized();
  p.half_u = half_u;
  p.half_v = half_v;
  p.group = std::move(group);
  return p;
}

std::vector<TimedPose> straight_line(const Vec3& from, const Vec3& to, const Mat3& rot,
                                     double duration, int keyframes) {
  std::vector<TimedPose> traj;
  for (int i = 0; i <= keyframes; ++i) {
    const double a = static_cast<double>(i) / keyframes;
    traj.push_back({a * duration, Pose(rot, from + a * (to - from))});
  }
  return traj;
}

}  // namespace

void Scene::validate() const {
  if (planes.empty()) throw InvalidArgument("scene needs at least one plane");
  for (const auto& p : planes) {
    if (std::abs(p.normal.norm() - 1.0) > 1e-9) throw InvalidArgument("plane normal not unit");
    if (std::abs(p.u_axis.norm() - 1.0) > 1e-9 || std::abs(p.u_axis.dot(p.normal)) > 1e-9) {
      throw InvalidArgument("plane u_axis must be unit and orthogonal to the normal");
    }
    if (!(p.half_u > 0.0) || !(p.half_v > 0.0)) throw InvalidArgument("plane extents must be positive");
    if (std::abs(p.normal.dot(p.center) - p.offset) > 1e-6) {
      throw InvalidArgument("plane center does not lie on the plane");
    }
  }
  for (const auto& l : landmarks) {
    if (!l.allFinite()) throw InvalidArgument("non-finite landmark");
  }
}

void ScenarioSpec::validate() const {
  scene.validate();
  if (!(lidar_rate > 0.0) || !(cam_rate > 0.0)) throw InvalidArgument("rates must be > 0");
  if (lidar_sigma < 0.0 || pixel_sigma < 0.0 || normal_sigma < 0.0 || motion_rot_sigma < 0.0 ||
      motion_trans_sigma < 0.0) {
    throw InvalidArgument("sigmas must be >= 0");
  }
  if (points_per_frame < 0) throw InvalidArgument("points_per_frame must be >= 0");
  if (trajectory.size() < 2) throw InvalidArgument("trajectory needs at least two poses");
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (!(trajectory[i].t > trajectory[i - 1].t)) {
      throw InvalidArgument("trajectory timestamps must be strictly increasing");
    }
  }
  if (!(fov_h_deg > 0.0 && fov_h_deg < 180.0) || !(fov_v_deg > 0.0 && fov_v_deg < 180.0)) {
    throw InvalidArgument("field of view must be in (0, 180) degrees");
  }
  if (!(max_range > 0.0)) throw InvalidArgument("max_range must be > 0");
}

Pose interpolate(const std::vector<TimedPose>& traj, double t) {
  if (t <= traj.front().t) return traj.front().pose;
  if (t >= traj.back().t) return traj.back().pose;
  const auto it = std::upper_bound(traj.begin(), traj.end(), t,
                                   [](double v, const TimedPose& p) { return v < p.t; });
  const TimedPose& b = *it;
  const TimedPose& a = *(it - 1);
  const double alpha = (t - a.t) / (b.t - a.t);
  return boxplus(a.pose, ErrorState(alpha * boxminus(b.pose, a.pose).delta));
}

void relinearize_at_lin_pose(TraceFrame& fr) {
  fr.lidar.reset();
  fr.visual.reset();
  if (!fr.lidar_factors.empty()) fr.lidar = linearize_point_plane(fr.lidar_factors, fr.lin_pose);
  if (fr.camera) {
    try {
      fr.visual = linearize_visual(fr.visual_factors, fr.lin_pose);
    } catch (const BehindCamera&) {
      // Visibility is decided at the truth; a perturbed linearization pose
      // may push a marginal landmark behind the camera.
    }
  }
}

ScenarioTrace generate(const ScenarioSpec& spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  const auto ts = frame_times(spec);
  ScenarioTrace trace = trace_header(spec);
  trace.frames.resize(ts.size());
  const auto n = static_cast<std::int64_t>(ts.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t k = 0; k < n; ++k) {
    trace.frames[static_cast<std::size_t>(k)] =
        generate_frame(spec, rng, ts, static_cast<std::size_t>(k));
  }
  return trace;
}

namespace serial {
ScenarioTrace generate(const ScenarioSpec& spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  const auto ts = frame_times(spec);
  ScenarioTrace trace = trace_header(spec);
  for (std::size_t k = 0; k < ts.size(); ++k) trace.frames.push_back(generate_frame(spec, rng, ts, k));
  return trace;
}
}  // namespace serial

std::string_view to_string(ScenarioName n) {
  switch (n) {
    case ScenarioName::SingleWall: return "SingleWall";
    case ScenarioName::WallAndGround: return "WallAndGround";
    case ScenarioName::Corridor: return "Corridor";
    case ScenarioName::OpenRoom: return "OpenRoom";
    case ScenarioName::Fig3Coupled: return "Fig3Coupled";
  }
  return "unknown";
}

ScenarioName parse_scenario(std::string_view name) {
  for (auto n : {ScenarioName::SingleWall, ScenarioName::WallAndGround, ScenarioName::Corridor,
                 ScenarioName::OpenRoom, ScenarioName::Fig3Coupled}) {
    if (name == to_string(n)) return n;
  }
  throw UnknownScenario("unknown scenario '" + std::string(name) + "'");
}

Mat3 look_rotation(const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

void set_group_enabled(ScenarioSpec& spec, std::string_view group, bool enabled) {
  for (auto& p : spec.scene.planes) {
    if (p.group == group) p.enabled = enabled;
  }
}

ScenarioSpec scenario_library(ScenarioName name) {
  ScenarioSpec spec;
  spec.name = std::string(to_string(name));
  spec.seed = 20240601;
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  auto& sc = spec.scene;

  switch (name) {
    case ScenarioName::SingleWall: {
      sc.planes.push_back(make_plane(ey, 6.0, {0, 6, 0}, ex, 1e4, 1e4, "wall"));
      sample_rect(sc.landmarks, {10, 6, 0}, ex, ez, 25.0, 3.0, 600, 1);
      spec.trajectory = straight_line({0, 0, 0}, {20, 0, 0}, look_rotation(ey), 50.0, 10);
      break;
    }
    case ScenarioName::WallAndGround: {
      sc.planes.push_back(make_plane(ey, 6.0, {0, 6, 0}, ex, 1e4, 1e4, "wall"));
      sc.planes.push_back(make_plane(ez, -1.5, {0, 0, -1.5}, ex, 1e4, 1e4, "ground"));
      sample_rect(sc.landmarks, {10, 6, 0.5}, ex, ez, 25.0, 2.0, 500, 1);
      sample_rect(sc.landmarks, {10, 3, -1.5}, ex, ey, 25.0, 3.0, 300, 2);
      const Mat3 rot = look_rotation(Vec3(0, std::cos(15 * kDeg), -std::sin(15 * kDeg)));
      spec.trajectory = straight_line({0, 0, 0}, {20, 0, 0}, rot, 50.0, 10);
      break;
    }
    case ScenarioName::Corridor: {
      sc.planes.push_back(make_plane(ey, 2.0, {50, 2, 0}, ex, 200.0, 1e3, "wall_left"));
      sc.planes.push_back(make_plane(ey, -2.0, {50, -2, 0}, ex, 200.0, 1e3, "wall_right"));
      sc.planes.push_back(make_plane(ez, -1.2, {50, 0, -1.2}, ex, 200.0, 2.0, "ground"));
      sample_rect(sc.landmarks, {40, 2, 0.3}, ex, ez, 60.0, 1.5, 600, 1);
      sample_rect(sc.landmarks, {40, -2, 0.3}, ex, ez, 60.0, 1.5, 600, 2);
      spec.trajectory = straight_line({0, 0, 0}, {40, 0, 0}, look_rotation(ex), 50.0, 10);
      break;
    }
    case ScenarioName::OpenRoom: {
      sc.planes.push_back(make_plane(ex, 5.0, {5, 0, 0}, ey, 5.0, 3.0, "wall_x"));
      sc.planes.push_back(make_plane(ey, 5.0, {0, 5, 0}, ex, 5.0, 3.0, "wall_y"));
      sc.planes.push_back(make_plane(ex, -5.0, {-5, 0, 0}, ey, 5.0, 3.0, "wall_back"));
      sc.planes.push_back(make_plane(ez, -1.5, {0, 0, -1.5}, ex, 5.0, 5.0, "ground"));
      sample_rect(sc.landmarks, {5, 0, 0}, ey, ez, 5.0, 1.4, 300, 1);
      sample_rect(sc.landmarks, {0, 5, 0}, ex, ez, 5.0, 1.4, 300, 2);
      // Slow circle facing the (+x, +y) corner with a small yaw sway.
      for (int i = 0; i <= 100; ++i) {
        const double t = 0.5 * i;
        const double a = 2.0 * std::numbers::pi * t / 25.0;
        const double yaw = (45.0 + 8.0 * std::sin(a)) * kDeg;
        const Vec3 pos(0.6 * std::cos(a) - 1.0, 0.6 * std::sin(a) - 1.0, 0.1 * std::sin(2 * a));
        spec.trajectory.push_back({t, Pose(look_rotation({std::cos(yaw), std::sin(yaw), 0}), pos)});
      }
      break;
    }
    case ScenarioName::Fig3Coupled: {
      // Narrow wall strips: the A cluster off-center, B on the other side.
      sc.planes.push_back(make_plane(ez, -1.5, {0, 10, -1.5}, ex, 20.0, 20.0, "ground"));
      sc.planes.push_back(make_plane(ey, 6.0, {2.0, 6, 0.5}, ex, 0.1, 1.0, "A"));
      sc.planes.push_back(make_plane(ey, 6.0, {-3.0, 6, 0.5}, ex, 0.1, 1.0, "B"));
      sc.planes.push_back(make_plane(ex, 3.0, {3.0, 5.45, 0.5}, ey, 0.1, 1.0, "side"));
      sample_rect(sc.landmarks, {0, 8, -1.5}, ex, ey, 5.0, 4.0, 300, 1);
      sample_rect(sc.landmarks, {0, 9, 1.0}, ex, ez, 6.0, 2.0, 200, 2);
      spec.points_per_frame = 4000;
      spec.trajectory = straight_line({0, 0, 0}, {0.5, 0, 0}, look_rotation(ey), 30.0, 3);
      break;
    }
  }
  return spec;
}

}  // namespace skf
