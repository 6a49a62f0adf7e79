#include "skf/scenario_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace skf {

namespace {

using nlohmann::json;

Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ScenarioLoadError(std::string("expected 3-vector for ") + what);
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <class T>
void optional_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

void put_pose(std::ostream& out, const Pose& p) {
  const Mat3& r = p.rotation();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out << ' ' << num(r(i, k));
  for (int i = 0; i < 3; ++i) out << ' ' << num(p.translation()(i));
}

double take(std::istringstream& in) {
  std::string tok;
  if (!(in >> tok)) throw ScenarioLoadError("truncated trace line");
  try {
    return std::stod(tok);
  } catch (const std::logic_error&) {
    throw ScenarioLoadError("malformed number in trace: " + tok);
  }
}

Pose take_pose(std::istringstream& in) {
  Mat3 r;
  Vec3 t;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r(i, k) = take(in);
  for (int i = 0; i < 3; ++i) t(i) = take(in);
  return Pose(r, t);
}

}  // namespace

ScenarioSpec parse_scenario_spec(const std::string& text) {
  ScenarioSpec spec;
  try {
    const json j = json::parse(text);
    optional_field(j, "name", spec.name);
    optional_field(j, "seed", spec.seed);
    optional_field(j, "lidar_rate", spec.lidar_rate);
    optional_field(j, "cam_rate", spec.cam_rate);
    optional_field(j, "lidar_sigma", spec.lidar_sigma);
    optional_field(j, "pixel_sigma", spec.pixel_sigma);
    optional_field(j, "points_per_frame", spec.points_per_frame);
    optional_field(j, "fov_h_deg", spec.fov_h_deg);
    optional_field(j, "fov_v_deg", spec.fov_v_deg);
    optional_field(j, "max_range", spec.max_range);
    optional_field(j, "min_incidence", spec.min_incidence);
    optional_field(j, "normal_sigma", spec.normal_sigma);
    optional_field(j, "min_landmark_depth", spec.min_landmark_depth);
    optional_field(j, "motion_rot_sigma", spec.motion_rot_sigma);
    optional_field(j, "motion_trans_sigma", spec.motion_trans_sigma);

    const json& scene = j.at("scene");
    for (const json& p : scene.at("planes")) {
      Plane pl;
      pl.normal = vec3(p.at("normal"), "normal");
      pl.offset = p.at("offset").get<double>();
      pl.center = p.contains("center") ? vec3(p["center"], "center") : pl.offset * pl.normal;
      pl.u_axis = vec3(p.at("u_axis"), "u_axis");
      optional_field(p, "half_u", pl.half_u);
      optional_field(p, "half_v", pl.half_v);
      optional_field(p, "group", pl.group);
      optional_field(p, "enabled", pl.enabled);
      spec.scene.planes.push_back(pl);
    }
    if (scene.contains("landmarks")) {
      for (const json& l : scene["landmarks"]) spec.scene.landmarks.push_back(vec3(l, "landmark"));
    }
    for (const json& tp : j.at("trajectory")) {
      const double t = tp.at("t").get<double>();
      const Vec3 trans = vec3(tp.at("translation"), "translation");
      Mat3 rot = Mat3::Identity();
      if (tp.contains("rotation")) {
        const auto& r = tp["rotation"];
        if (!r.is_array() || r.size() != 9) throw ScenarioLoadError("rotation needs 9 entries");
        for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[static_cast<std::size_t>(i)].get<double>();
      } else if (tp.contains("axis_angle")) {
        rot = so3_exp(vec3(tp["axis_angle"], "axis_angle"));
      }
      spec.trajectory.push_back({t, Pose(rot, trans)});
    }
    spec.validate();
  } catch (const ScenarioLoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioLoadError(std::string("invalid scenario config: ") + e.what());
  }
  return spec;
}

ScenarioSpec load_scenario_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioLoadError("cannot open scenario config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_spec(ss.str());
}

std::string scenario_spec_to_json(const ScenarioSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["lidar_rate"] = spec.lidar_rate;
  j["cam_rate"] = spec.cam_rate;
  j["lidar_sigma"] = spec.lidar_sigma;
  j["pixel_sigma"] = spec.pixel_sigma;
  j["points_per_frame"] = spec.points_per_frame;
  j["fov_h_deg"] = spec.fov_h_deg;
  j["fov_v_deg"] = spec.fov_v_deg;
  j["max_range"] = spec.max_range;
  j["min_incidence"] = spec.min_incidence;
  j["normal_sigma"] = spec.normal_sigma;
  j["min_landmark_depth"] = spec.min_landmark_depth;
  j["motion_rot_sigma"] = spec.motion_rot_sigma;
  j["motion_trans_sigma"] = spec.motion_trans_sigma;
  json planes = json::array();
  for (const auto& p : spec.scene.planes) {
    planes.push_back({{"normal", to_json(p.normal)},
                      {"offset", p.offset},
                      {"center", to_json(p.center)},
                      {"u_axis", to_json(p.u_axis)},
                      {"half_u", p.half_u},
                      {"half_v", p.half_v},
                      {"group", p.group},
                      {"enabled", p.enabled}});
  }
  json landmarks = json::array();
  for (const auto& l : spec.scene.landmarks) landmarks.push_back(to_json(l));
  j["scene"] = {{"planes", planes}, {"landmarks", landmarks}};
  json traj = json::array();
  for (const auto& tp : spec.trajectory) {
    json rot = json::array();
    for (int i = 0; i < 9; ++i) rot.push_back(tp.pose.rotation()(i / 3, i % 3));
    traj.push_back({{"t", tp.t}, {"translation", to_json(tp.pose.translation())}, {"rotation", rot}});
  }
  j["trajectory"] = traj;
  return j.dump(2);
}

void write_trace(std::ostream& out, const ScenarioTrace& trace) {
  std::string name = trace.name.empty() ? "unnamed" : trace.name;
  for (char& c : name) {
    if (c == ' ' || c == '\t') c = '_';
  }
  out << "skf-trace 1 " << name << ' ' << trace.seed
      << ' ' << num(trace.lidar_sigma) << ' ' << num(trace.motion_rot_sigma) << ' '
      << num(trace.motion_trans_sigma) << ' ' << trace.frames.size() << '\n';
  for (const auto& fr : trace.frames) {
    out << "frame " << fr.index << ' ' << num(fr.t) << ' ' << (fr.camera ? 1 : 0);
    put_pose(out, fr.truth);
    put_pose(out, fr.lin_pose);
    for (int i = 0; i < 6; ++i) out << ' ' << num(fr.motion_delta.delta(i));
    out << ' ' << fr.lidar_factors.size() << ' ' << fr.visual_factors.size() << '\n';
    for (const auto& f : fr.lidar_factors) {
      out << "lidar";
      for (int i = 0; i < 3; ++i) out << ' ' << num(f.point_body(i));
      for (int i = 0; i < 3; ++i) out << ' ' << num(f.plane_normal(i));
      out << ' ' << num(f.plane_offset) << ' ' << num(f.noise_sigma) << '\n';
    }
    for (const auto& f : fr.visual_factors) {
      out << "visual";
      for (int i = 0; i < 3; ++i) out << ' ' << num(f.landmark_world(i));
      out << ' ' << num(f.pixel_obs(0)) << ' ' << num(f.pixel_obs(1)) << ' '
          << num(f.noise_sigma) << '\n';
    }
    out << "end\n";
  }
}

void write_trace(const std::filesystem::path& path, const ScenarioTrace& trace) {
  std::ofstream out(path);
  if (!out) throw OutputIoError("cannot write trace " + path.string());
  write_trace(out, trace);
  if (!out) throw OutputIoError("failed writing trace " + path.string());
}

ScenarioTrace read_trace(std::istream& in) {
  ScenarioTrace trace;
  std::string line;
  if (!std::getline(in, line)) throw ScenarioLoadError("empty trace");
  std::size_t nframes = 0;
  {
    std::istringstream hs(line);
    std::string magic;
    int version = 0;
    hs >> magic >> version >> trace.name >> trace.seed;
    if (magic != "skf-trace" || version != 1 || !hs) throw ScenarioLoadError("not an skf trace");
    trace.lidar_sigma = take(hs);
    trace.motion_rot_sigma = take(hs);
    trace.motion_trans_sigma = take(hs);
    if (!(hs >> nframes)) throw ScenarioLoadError("trace header missing frame count");
  }
  try {
    for (std::size_t k = 0; k < nframes; ++k) {
      if (!std::getline(in, line)) throw ScenarioLoadError("trace truncated");
      std::istringstream fs(line);
      std::string tag;
      TraceFrame fr;
      int cam = 0;
      std::size_t nl = 0, nv = 0;
      fs >> tag >> fr.index;
      if (tag != "frame") throw ScenarioLoadError("expected frame line");
      fr.t = take(fs);
      fs >> cam;
      fr.camera = cam != 0;
      fr.truth = take_pose(fs);
      fr.lin_pose = take_pose(fs);
      Vec6 d;
      for (int i = 0; i < 6; ++i) d(i) = take(fs);
      fr.motion_delta = ErrorState(d);
      if (!(fs >> nl >> nv)) throw ScenarioLoadError("frame line missing factor counts");
      for (std::size_t i = 0; i < nl; ++i) {
        std::getline(in, line);
        std::istringstream ls(line);
        ls >> tag;
        if (tag != "lidar") throw ScenarioLoadError("expected lidar line");
        PointPlaneFactor f;
        for (int c = 0; c < 3; ++c) f.point_body(c) = take(ls);
        for (int c = 0; c < 3; ++c) f.plane_normal(c) = take(ls);
        f.plane_offset = take(ls);
        f.noise_sigma = take(ls);
        fr.lidar_factors.push_back(f);
      }
      for (std::size_t i = 0; i < nv; ++i) {
        std::getline(in, line);
        std::istringstream vs(line);
        vs >> tag;
        if (tag != "visual") throw ScenarioLoadError("expected visual line");
        VisualFactor f;
        for (int c = 0; c < 3; ++c) f.landmark_world(c) = take(vs);
        f.pixel_obs(0) = take(vs);
        f.pixel_obs(1) = take(vs);
        f.noise_sigma = take(vs);
        fr.visual_factors.push_back(f);
      }
      if (!std::getline(in, line) || line != "end") throw ScenarioLoadError("expected end line");
      relinearize_at_lin_pose(fr);
      trace.frames.push_back(std::move(fr));
    }
  } catch (const ScenarioLoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioLoadError(std::string("invalid trace: ") + e.what());
  }
  return trace;
}

ScenarioTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioLoadError("cannot open trace " + path.string());
  return read_trace(in);
}

}  // namespace skf
