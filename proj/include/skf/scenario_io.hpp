#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "skf/simulator.hpp"

namespace skf {

/// JSON scenario configuration. Every ScenarioSpec field is optional and
/// falls back to its default except `scene.planes` and `trajectory`.
///
///   {
///     "name": "my_scene", "seed": 7,
///     "lidar_rate": 10, "cam_rate": 10,
///     "lidar_sigma": 0.02, "pixel_sigma": 0.002, "points_per_frame": 600,
///     "fov_h_deg": 70.4, "fov_v_deg": 77.2, "max_range": 40,
///     "min_incidence": 0.1, "normal_sigma": 0.002, "min_landmark_depth": 0.5,
///     "motion_rot_sigma": 0.002, "motion_trans_sigma": 0.01,
///     "scene": {
///       "planes": [{"normal": [0,1,0], "offset": 6, "center": [0,6,0],
///                   "u_axis": [1,0,0], "half_u": 1e4, "half_v": 1e4,
///                   "group": "wall", "enabled": true}],
///       "landmarks": [[1,6,0], [2,6,1]]
///     },
///     "trajectory": [{"t": 0, "translation": [0,0,0],
///                     "rotation": [r00,r01,r02, r10,r11,r12, r20,r21,r22]},
///                    {"t": 1, "translation": [1,0,0], "axis_angle": [0,0,0]}]
///   }
///
/// Throws ScenarioLoadError on unreadable or malformed input.
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);
ScenarioSpec parse_scenario_spec(const std::string& json_text);
std::string scenario_spec_to_json(const ScenarioSpec& spec);

/// Line-oriented trace dump: a header line, then per frame a `frame` line
/// followed by its `lidar`/`visual` factor lines and an `end` line. Numbers
/// are written with 17 significant digits so a reloaded trace is identical.
void write_trace(std::ostream& out, const ScenarioTrace& trace);
void write_trace(const std::filesystem::path& path, const ScenarioTrace& trace);
ScenarioTrace read_trace(std::istream& in);
ScenarioTrace read_trace(const std::filesystem::path& path);

}  // namespace skf
