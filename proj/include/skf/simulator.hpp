#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skf/measurements.hpp"
#include "skf/state.hpp"

namespace skf {

/// Bounded planar patch: points x with normal . x = offset, restricted to the
/// rectangle centered at `center` spanned by u_axis and normal x u_axis.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  Vec3 center = Vec3::Zero();
  Vec3 u_axis = Vec3::UnitX();
  double half_u = 1e4;
  double half_v = 1e4;
  std::string group;  // free-form tag, e.g. the point clusters of Fig3Coupled
  bool enabled = true;

  Vec3 v_axis() const { return normal.cross(u_axis); }
};

struct Scene {
  std::vector<Plane> planes;
  std::vector<Vec3> landmarks;

  void validate() const;
};

struct TimedPose {
  double t = 0.0;  // s
  Pose pose;
};

struct ScenarioSpec {
  std::string name = "custom";
  Scene scene;
  std::vector<TimedPose> trajectory;
  double lidar_rate = 10.0;    // Hz; one trace frame per LiDAR sweep
  double cam_rate = 10.0;      // Hz
  double lidar_sigma = 0.02;   // m, effective point-to-plane residual sigma
  double pixel_sigma = 0.002;  // normalized image units
  int points_per_frame = 600;
  std::uint64_t seed = 1;

  // Sensor model.
  double fov_h_deg = 70.4;
  double fov_v_deg = 77.2;
  double max_range = 40.0;        // m
  double min_incidence = 0.1;     // |cos| below which a ray grazes and is dropped
  double normal_sigma = 0.002;    // rad, local plane-fit normal error
  double min_landmark_depth = 0.5;  // m
  // Odometry increment noise per frame.
  double motion_rot_sigma = 0.002;    // rad
  double motion_trans_sigma = 0.01;   // m

  void validate() const;
  double duration() const { return trajectory.back().t - trajectory.front().t; }
};

struct TraceFrame {
  std::size_t index = 0;
  double t = 0.0;
  Pose truth;
  ErrorState motion_delta;  // noisy odometry increment from the previous frame
  Pose lin_pose;            // truth perturbed by a predicted-error sample
  std::vector<PointPlaneFactor> lidar_factors;
  std::optional<LidarBatch> lidar;  // absent when no plane was visible
  bool camera = false;              // a camera exposure fell into this frame
  std::vector<VisualFactor> visual_factors;
  std::optional<VisualBatch> visual;
};

struct ScenarioTrace {
  std::string name;
  std::uint64_t seed = 0;
  double lidar_sigma = 0.0;
  double motion_rot_sigma = 0.0;
  double motion_trans_sigma = 0.0;
  std::vector<TraceFrame> frames;
};

/// Pure function of the spec. Frames are generated in parallel; each draw is
/// keyed by (seed, frame, index, stream) so the result does not depend on
/// scheduling.
ScenarioTrace generate(const ScenarioSpec& spec);
namespace serial {
ScenarioTrace generate(const ScenarioSpec& spec);
}

/// Rebuilds batches for a frame from its factors at lin_pose.
void relinearize_at_lin_pose(TraceFrame& frame);

enum class ScenarioName { SingleWall, WallAndGround, Corridor, OpenRoom, Fig3Coupled };

std::string_view to_string(ScenarioName n);
/// Throws UnknownScenario.
ScenarioName parse_scenario(std::string_view name);

/// Canonical specs. Fig3Coupled carries a wall cluster tagged "A", a second
/// cluster on the same wall tagged "B", and a side strip; B can be disabled
/// with set_group_enabled.
ScenarioSpec scenario_library(ScenarioName name);
void set_group_enabled(ScenarioSpec& spec, std::string_view group, bool enabled);

/// Rotation whose body z axis points along `forward` and body y axis points
/// as close to -up as possible (x right, y down, z forward).
Mat3 look_rotation(const Vec3& forward, const Vec3& up = Vec3::UnitZ());

/// Ground-truth pose at time t by geodesic interpolation of the trajectory.
Pose interpolate(const std::vector<TimedPose>& traj, double t);

}  // namespace skf
