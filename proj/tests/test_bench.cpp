#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "skf/bench.hpp"
#include "skf/errors.hpp"
#include "skf/scenario_io.hpp"

using namespace skf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "skf_bench_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) ++n;
  return n;
}

// Library scenario cut to the first `seconds` of its trajectory, saved as JSON.
fs::path short_scenario(ScenarioName name, double seconds, const fs::path& dir) {
  ScenarioSpec spec = scenario_library(name);
  std::vector<TimedPose> traj{spec.trajectory.front(),
                              {seconds, interpolate(spec.trajectory, seconds)}};
  spec.trajectory = traj;
  const fs::path p = dir / (spec.name + ".json");
  std::ofstream(p) << scenario_spec_to_json(spec);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SKF_SKF_BENCH_EXE) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kOutputs[] = {"metrics.txt",  "frames.csv",    "flags.csv",     "reports.txt",
                          "trajectory.csv", "lidar_info.txt", "ellipsoids.csv"};

}  // namespace

TEST(Metrics, AteRmseMatchesReference) {
  std::mt19937_64 rng(81);
  std::normal_distribution<double> n;
  std::vector<Pose> est, truth;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 t(n(rng), n(rng), n(rng));
    truth.emplace_back(Mat3::Identity(), t);
    est.emplace_back(so3_exp(Vec3(0.1, 0, 0)), t + 0.05 * Vec3(n(rng), n(rng), n(rng)));
  }
  // Per-axis accumulation in long double.
  long double sx = 0, sy = 0, sz = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const long double dx = est[i].translation().x() - truth[i].translation().x();
    const long double dy = est[i].translation().y() - truth[i].translation().y();
    const long double dz = est[i].translation().z() - truth[i].translation().z();
    sx += dx * dx;
    sy += dy * dy;
    sz += dz * dz;
  }
  const double ref = static_cast<double>(std::sqrt((sx + sy + sz) / est.size()));
  EXPECT_NEAR(ate_rmse(est, truth), ref, 1e-12);
  EXPECT_NEAR(end_to_end_error(est, truth),
              (est.back().translation() - truth.back().translation()).norm(), 1e-15);
  EXPECT_EQ(ate_rmse({}, {}), 0.0);
  est.pop_back();
  EXPECT_THROW(ate_rmse(est, truth), InvalidArgument);
}

TEST(Run, OpenRoomSelectiveNeverUsesVisual) {
  RunConfig cfg;
  cfg.scenario = "OpenRoom";
  cfg.output_dir = scratch("openroom");
  const RunMetrics m = run(cfg);
  EXPECT_EQ(m.degenerate_frames, 0u);
  EXPECT_EQ(m.clean_frames, 501u);
  ASSERT_EQ(m.per_frame_visual_us.size(), 501u);
  for (double us : m.per_frame_visual_us) EXPECT_EQ(us, 0.0);
}

TEST(Run, CorridorSelectiveBeatsLidarOnly) {
  RunConfig cfg;
  cfg.scenario = "Corridor";
  cfg.output_dir = scratch("corridor_sel");
  const RunMetrics sel = run(cfg);
  cfg.mode = RunMode::LidarOnly;
  cfg.output_dir = scratch("corridor_lo");
  const RunMetrics lo = run(cfg);
  EXPECT_LT(sel.end_to_end, lo.end_to_end);
  EXPECT_GT(sel.degenerate_frames, 0u);
}

TEST(Run, OutputsAreByteIdenticalAcrossRuns) {
  const fs::path base = scratch("determinism");
  RunConfig cfg;
  cfg.scenario = short_scenario(ScenarioName::WallAndGround, 5.0, base).string();
  cfg.detector.method = DetectorMethod::NormalizedHessian;
  cfg.output_dir = base / "a";
  run(cfg);
  cfg.output_dir = base / "b";
  run(cfg);
  for (const char* f : kOutputs) {
    EXPECT_EQ(slurp(base / "a" / f), slurp(base / "b" / f)) << f;
    EXPECT_FALSE(slurp(base / "a" / f).empty()) << f;
  }
  EXPECT_FALSE(fs::exists(base / "a" / "timing.csv"));
}

TEST(Run, SchemaIsStable) {
  const fs::path base = scratch("schema");
  RunConfig cfg;
  cfg.scenario = short_scenario(ScenarioName::Corridor, 2.0, base).string();
  cfg.output_dir = base / "run";
  cfg.write_timing = true;
  run(cfg);
  const fs::path d = cfg.output_dir;
  EXPECT_EQ(first_line(d / "frames.csv"), "frame,t,branch,selected_dims,regularized,posterior_trace");
  EXPECT_EQ(first_line(d / "timing.csv"), "frame,visual_us");
  EXPECT_EQ(first_line(d / "flags.csv"),
            "frame,method,rot0,rot1,rot2,trans0,trans1,trans2,total,"
            "rot_x,rot_y,rot_z,trans_x,trans_y,trans_z");
  EXPECT_EQ(first_line(d / "ellipsoids.csv"), kEllipsoidHeader);
  EXPECT_EQ(first_line(d / "trajectory.csv"), "frame,t,est_x,est_y,est_z,true_x,true_y,true_z");
  EXPECT_EQ(line_count(d / "frames.csv"), 22u);
  EXPECT_EQ(line_count(d / "ellipsoids.csv"), 1u + 2u * 21u);
  EXPECT_EQ(line_count(d / "reports.txt"), 21u);

  std::ifstream metrics(d / "metrics.txt");
  std::vector<std::string> keys;
  for (std::string k, v; metrics >> k >> v;) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"scenario", "seed", "mode", "detector", "theta_r_rad2",
                                            "theta_t_m2", "frames", "ate_rmse_m", "end_to_end_m",
                                            "degenerate_frames", "clean_frames"}));
}

TEST(Run, MatchesGoldenFiles) {
  const fs::path base = scratch("golden");
  RunConfig cfg;
  cfg.scenario = short_scenario(ScenarioName::Corridor, 2.0, base).string();
  cfg.seed = 7;
  cfg.output_dir = base / "run";
  run(cfg);
  const fs::path golden = fs::path(SKF_GOLDEN_DIR) / "corridor_seed7";
  for (const char* f : {"metrics.txt", "frames.csv", "flags.csv"}) {
    if (std::getenv("SKF_UPDATE_GOLDEN")) {
      fs::create_directories(golden);
      fs::copy_file(cfg.output_dir / f, golden / f, fs::copy_options::overwrite_existing);
    }
    EXPECT_EQ(slurp(cfg.output_dir / f), slurp(golden / f)) << f;
  }
}

TEST(Run, TraceReplayReproducesDirectRun) {
  const fs::path base = scratch("replay");
  RunConfig cfg;
  cfg.scenario = short_scenario(ScenarioName::SingleWall, 3.0, base).string();
  write_trace(base / "s.trace", load_or_generate(cfg));
  cfg.output_dir = base / "direct";
  run(cfg);
  cfg.scenario = (base / "s.trace").string();
  cfg.output_dir = base / "replay";
  run(cfg);
  for (const char* f : {"frames.csv", "flags.csv", "trajectory.csv"}) {
    EXPECT_EQ(slurp(base / "direct" / f), slurp(base / "replay" / f)) << f;
  }
}

TEST(Run, ConfigAndIoErrors) {
  RunConfig cfg;
  cfg.scenario = "Atrium";
  cfg.output_dir = scratch("errors");
  EXPECT_THROW(run(cfg), UnknownScenario);
  cfg.scenario = "/nonexistent/scene.json";
  EXPECT_THROW(run(cfg), ScenarioLoadError);
  const fs::path blocker = scratch("errors") / "file";
  std::ofstream(blocker) << "x";
  cfg.scenario = short_scenario(ScenarioName::SingleWall, 1.0, scratch("errors2")).string();
  cfg.output_dir = blocker / "sub";
  EXPECT_THROW(run(cfg), OutputIoError);
  EXPECT_THROW(parse_mode("Hybrid"), InvalidArgument);
}

TEST(Ellipsoids, RebuildMatchesRunOutput) {
  const fs::path base = scratch("ellipsoids");
  RunConfig cfg;
  cfg.scenario = short_scenario(ScenarioName::WallAndGround, 2.0, base).string();
  cfg.output_dir = base / "run";
  run(cfg);
  const std::string original = slurp(cfg.output_dir / "ellipsoids.csv");
  fs::remove(cfg.output_dir / "ellipsoids.csv");
  emit_ellipsoids(cfg.output_dir);
  EXPECT_EQ(slurp(cfg.output_dir / "ellipsoids.csv"), original);
}

TEST(Ellipsoids, EmptyRunIsHeaderOnly) {
  const fs::path d = scratch("ellipsoids_empty");
  std::ofstream(d / "lidar_info.txt").close();
  emit_ellipsoids(d);
  EXPECT_EQ(slurp(d / "ellipsoids.csv"), std::string(kEllipsoidHeader) + "\n");
  EXPECT_THROW(emit_ellipsoids(scratch("ellipsoids_missing")), MissingArtifacts);
}

TEST(Ellipsoids, IsotropicAndCoupledRows) {
  InfoForm iso;
  iso.info = SymMatrix6{4.0 * Mat6::Identity()};
  std::istringstream rows(ellipsoid_rows(3, iso, Vec3(1, 2, 3)));
  std::string line;
  std::vector<std::vector<double>> radii;
  while (std::getline(rows, line)) {
    std::vector<std::string> tok;
    std::stringstream ls(line);
    for (std::string t; std::getline(ls, t, ',');) tok.push_back(t);
    ASSERT_EQ(tok.size(), 17u);
    EXPECT_EQ(tok[0], "3");
    radii.push_back({std::stod(tok[14]), std::stod(tok[15]), std::stod(tok[16])});
  }
  ASSERT_EQ(radii.size(), 2u);
  for (const auto& r : radii)
    for (double v : r) EXPECT_NEAR(v, 0.5, 1e-9);

  std::mt19937_64 rng(82);
  std::normal_distribution<double> n;
  Mat6 a;
  for (int i = 0; i < 36; ++i) a(i) = n(rng);
  InfoForm coupled;
  coupled.info = SymMatrix6::symmetrized(a * a.transpose() + 0.1 * Mat6::Identity());
  const Ellipsoid c = report_to_ellipsoid(detect_cov_schur(coupled, Thresholds{}), Vec3::Zero());
  const Ellipsoid h = report_to_ellipsoid(detect_block_hessian(coupled, Thresholds{}), Vec3::Zero());
  for (int k = 0; k < 3; ++k) EXPECT_GE(c.radii(k), h.radii(k));
}

TEST(Compare, OpenRoomAllDetectorsAgree) {
  RunConfig cfg;
  cfg.scenario = "OpenRoom";
  cfg.output_dir = scratch("compare_openroom");
  const ComparisonTable t = compare_detectors(cfg);
  ASSERT_EQ(t.rows.size(), 6u);
  for (const auto& r : t.rows) EXPECT_EQ(r.metrics.degenerate_frames, 0u) << r.label;
  EXPECT_TRUE(fs::exists(cfg.output_dir / "compare.csv"));
  EXPECT_EQ(line_count(cfg.output_dir / "flags_timeline.csv"), 502u);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "Selective-ConditionNumber" / "metrics.txt"));
  EXPECT_THROW(t.find("Selective-Oracle"), InvalidArgument);
}

TEST(Compare, Fig3BlockHessianMissesCoupledDegeneracy) {
  RunConfig cfg;
  cfg.scenario = "Fig3Coupled";
  cfg.far_cluster = false;
  cfg.output_dir = scratch("compare_fig3");
  const ComparisonTable t = compare_detectors(cfg);
  EXPECT_GT(t.find("Selective-CovSchur").metrics.degenerate_frames, 0u);
  EXPECT_EQ(t.find("Selective-BlockHessian").metrics.degenerate_frames, 0u);
  EXPECT_LE(t.find("Selective-CovSchur").metrics.end_to_end,
            t.find("Selective-BlockHessian").metrics.end_to_end);
}

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("cli");
  const std::string json = short_scenario(ScenarioName::SingleWall, 1.0, d).string();
  EXPECT_EQ(run_cli("run --scenario " + json + " --out " + (d / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(d / "ok" / "metrics.txt"));
  EXPECT_EQ(run_cli("run --scenario Atrium --out " + (d / "x").string()), 2);
  EXPECT_EQ(run_cli("run --scenario " + json + " --detector Oracle --out " + (d / "x").string()), 2);
  EXPECT_EQ(run_cli("run --scenario " + json + " --mode Hybrid --out " + (d / "x").string()), 2);
  EXPECT_EQ(run_cli("run --scenario " + json + " --theta-t -1 --out " + (d / "x").string()), 2);
  EXPECT_EQ(run_cli("run --bogus-flag"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("run --scenario " + json + " --out " + (d / "ok" / "metrics.txt" / "sub").string()), 3);
  EXPECT_EQ(run_cli("ellipsoids --out " + (d / "nothing").string()), 3);
  EXPECT_EQ(run_cli("ellipsoids --out " + (d / "ok").string()), 0);
  EXPECT_EQ(run_cli("gen-trace --scenario " + json + " --out " + (d / "s.trace").string()), 0);
  EXPECT_EQ(run_cli("gen-trace --scenario " + json + " --out /nonexistent/dir/s.trace"), 3);
  EXPECT_EQ(run_cli("run --scenario " + (d / "s.trace").string() + " --mode AllIn --out " +
                    (d / "replay").string()),
            0);
  EXPECT_EQ(run_cli("compare --scenario " + json + " --seed 11 --out " + (d / "cmp").string()), 0);
  EXPECT_TRUE(fs::exists(d / "cmp" / "compare.csv"));
}
