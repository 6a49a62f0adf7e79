#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skf/degeneracy.hpp"
#include "skf/filter.hpp"
#include "skf/simulator.hpp"

namespace skf {

enum class RunMode { Selective, AllIn, LidarOnly };

std::string_view to_string(RunMode m);
RunMode parse_mode(std::string_view name);

struct RunConfig {
  // Library scenario name, JSON scenario config, or `.trace` dump.
  std::string scenario = "Corridor";
  DetectorConfig detector;
  RunMode mode = RunMode::Selective;
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  bool far_cluster = true;            // Fig3Coupled: keep the "B" cluster
  bool write_timing = false;          // timing.csv (wall clock, not reproducible)
  std::filesystem::path output_dir = "skf_out";
};

struct RunMetrics {
  double ate_rmse = 0.0;    // m
  double end_to_end = 0.0;  // m, final-frame translation error
  std::vector<double> per_frame_visual_us;
  std::size_t degenerate_frames = 0;
  std::size_t clean_frames = 0;

  double mean_visual_us() const;
};

/// In-memory result of one filter pass over a trace.
struct RunRecord {
  RunMetrics metrics;
  std::vector<FrameStats> stats;
  std::vector<DegeneracyReport> reports;
  std::vector<Pose> estimates;
  std::vector<Pose> truths;
  std::vector<double> times;
  std::vector<std::optional<InfoForm>> lidar_info;  // at the prior estimate
  std::vector<Vec3> lidar_centers;
};

/// Initial covariance used by every run: 0.01 rad and 0.05 m standard deviations.
SymMatrix6 initial_covariance();

/// Resolves a RunConfig scenario to a trace. Throws UnknownScenario or
/// ScenarioLoadError.
ScenarioTrace load_or_generate(const RunConfig& cfg);
ScenarioSpec resolve_spec(const RunConfig& cfg);

/// Filters a trace under the given mode and detector.
RunRecord execute(const ScenarioTrace& trace, RunMode mode, const DetectorConfig& detector);

/// Generates or loads the trace, executes it and writes metrics.txt,
/// frames.csv, flags.csv, reports.txt, lidar_info.txt, trajectory.csv and
/// ellipsoids.csv into cfg.output_dir, all deterministic functions of the
/// config. timing.csv is added when cfg.write_timing is set.
RunMetrics run(const RunConfig& cfg);
void write_run_outputs(const RunConfig& cfg, const ScenarioTrace& trace, const RunRecord& rec);

double ate_rmse(const std::vector<Pose>& estimate, const std::vector<Pose>& truth);
double end_to_end_error(const std::vector<Pose>& estimate, const std::vector<Pose>& truth);

struct ComparisonRow {
  std::string label;
  RunMode mode = RunMode::Selective;
  DetectorMethod detector = DetectorMethod::CovSchur;
  RunMetrics metrics;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  const ComparisonRow& find(std::string_view label) const;
};

/// Selective runs with every detector plus AllIn and LidarOnly references,
/// each written to its own subdirectory of output_dir, with compare.csv and
/// flags_timeline.csv at the top level.
ComparisonTable compare_detectors(const RunConfig& base);

/// Recomputes CovSchur and BlockHessian ellipsoids from a run directory's
/// lidar_info.txt and writes ellipsoids.csv there. Throws MissingArtifacts.
void emit_ellipsoids(const std::filesystem::path& run_dir);

inline constexpr std::string_view kEllipsoidHeader =
    "frame,method,cx,cy,cz,a0x,a0y,a0z,a1x,a1y,a1z,a2x,a2y,a2z,r0,r1,r2";

/// Ellipsoid rows for one frame's LiDAR information (CovSchur, then
/// BlockHessian reciprocated).
std::string ellipsoid_rows(std::size_t frame, const InfoForm& lidar, const Vec3& center);

}  // namespace skf
