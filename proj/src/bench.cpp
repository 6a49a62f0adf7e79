#include "skf/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "skf/scenario_io.hpp"

namespace skf {

namespace fs = std::filesystem;

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

InfoForm build_visual(const std::vector<VisualFactor>& factors, const Pose& lin_pose) {
  try {
    return reduce_visual(linearize_visual(factors, lin_pose));
  } catch (const BehindCamera& e) {
    std::vector<VisualFactor> kept;
    std::size_t next = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (next < e.indices().size() && e.indices()[next] == i) {
        ++next;
        continue;
      }
      kept.push_back(factors[i]);
    }
    return reduce_visual(linearize_visual(kept, lin_pose));
  }
}

class OutFile {
 public:
  explicit OutFile(const fs::path& path) : path_(path), out_(path) {
    if (!out_) throw OutputIoError("cannot open " + path.string() + " for writing");
  }
  ~OutFile() = default;
  template <class... Args>
  void line(fmt::format_string<Args...> f, Args&&... args) {
    out_ << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }
  void raw(std::string_view s) { out_ << s; }
  void close() {
    out_.close();
    if (!out_) throw OutputIoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw OutputIoError("cannot create output directory " + dir.string());
  }
}

int dominant_axis(const Vec3& v) {
  int k = 0;
  v.cwiseAbs().maxCoeff(&k);
  return k;
}

std::string flags_row(std::size_t frame, const DegeneracyReport& rep) {
  std::array<int, 3> rot_axes{}, trans_axes{};
  for (int i = 0; i < 3; ++i) {
    if (rep.rot_flags[i]) rot_axes[dominant_axis(rep.rot_eigvecs.col(i))] = 1;
    if (rep.trans_flags[i]) trans_axes[dominant_axis(rep.trans_eigvecs.col(i))] = 1;
  }
  const auto s = rep.slots();
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", frame,
                     to_string(rep.method), int(s[0]), int(s[1]), int(s[2]), int(s[3]),
                     int(s[4]), int(s[5]), int(rep.total), rot_axes[0], rot_axes[1],
                     rot_axes[2], trans_axes[0], trans_axes[1], trans_axes[2]);
}

std::string ellipsoid_row(std::size_t frame, std::string_view method, const Ellipsoid& e) {
  std::string s = fmt::format("{},{},{:.9g},{:.9g},{:.9g}", frame, method, e.center.x(),
                              e.center.y(), e.center.z());
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) s += fmt::format(",{:.9g}", e.axes(r, c));
  for (int i = 0; i < 3; ++i) s += fmt::format(",{:.9g}", e.radii(i));
  return s;
}

}  // namespace

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::Selective: return "Selective";
    case RunMode::AllIn: return "AllIn";
    case RunMode::LidarOnly: return "LidarOnly";
  }
  return "unknown";
}

RunMode parse_mode(std::string_view name) {
  for (auto m : {RunMode::Selective, RunMode::AllIn, RunMode::LidarOnly}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

double RunMetrics::mean_visual_us() const {
  if (per_frame_visual_us.empty()) return 0.0;
  return std::accumulate(per_frame_visual_us.begin(), per_frame_visual_us.end(), 0.0) /
         static_cast<double>(per_frame_visual_us.size());
}

SymMatrix6 initial_covariance() {
  Vec6 d;
  d << 1e-4, 1e-4, 1e-4, 2.5e-3, 2.5e-3, 2.5e-3;
  return SymMatrix6::symmetrized(d.asDiagonal());
}

ScenarioSpec resolve_spec(const RunConfig& cfg) {
  ScenarioSpec spec = ends_with(cfg.scenario, ".json") || fs::is_regular_file(cfg.scenario)
                          ? load_scenario_spec(cfg.scenario)
                          : scenario_library(parse_scenario(cfg.scenario));
  if (cfg.seed) spec.seed = *cfg.seed;
  if (!cfg.far_cluster) set_group_enabled(spec, "B", false);
  return spec;
}

ScenarioTrace load_or_generate(const RunConfig& cfg) {
  if (ends_with(cfg.scenario, ".trace")) return read_trace(fs::path(cfg.scenario));
  return generate(resolve_spec(cfg));
}

double ate_rmse(const std::vector<Pose>& estimate, const std::vector<Pose>& truth) {
  if (estimate.size() != truth.size()) throw InvalidArgument("trajectory length mismatch");
  if (estimate.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    sum += (estimate[i].translation() - truth[i].translation()).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(estimate.size()));
}

double end_to_end_error(const std::vector<Pose>& estimate, const std::vector<Pose>& truth) {
  if (estimate.size() != truth.size()) throw InvalidArgument("trajectory length mismatch");
  if (estimate.empty()) return 0.0;
  return (estimate.back().translation() - truth.back().translation()).norm();
}

RunRecord execute(const ScenarioTrace& trace, RunMode mode, const DetectorConfig& detector) {
  RunRecord rec;
  if (trace.frames.empty()) return rec;

  Vec6 q;
  const double qr = std::max(trace.motion_rot_sigma * trace.motion_rot_sigma, 1e-12);
  const double qt = std::max(trace.motion_trans_sigma * trace.motion_trans_sigma, 1e-12);
  q << qr, qr, qr, qt, qt, qt;
  const SymMatrix6 q_process = SymMatrix6::symmetrized(q.asDiagonal());

  FusionPolicyConfig policy;
  policy.detector = detector;
  policy.enable_selective = mode == RunMode::Selective;

  BeliefState belief{trace.frames.front().truth, initial_covariance()};
  const LidarBatch empty_batch;

  for (const auto& fr : trace.frames) {
    if (fr.index > 0) belief = predict(belief, fr.motion_delta, q_process);

    std::optional<LidarBatch> batch;
    InfoForm lidar = InfoForm::zero();
    if (!fr.lidar_factors.empty()) {
      batch = linearize_point_plane(fr.lidar_factors, belief.x_hat);
      lidar = reduce_lidar(*batch);
      rec.lidar_info.emplace_back(lidar);
    } else {
      rec.lidar_info.emplace_back(std::nullopt);
    }
    rec.lidar_centers.push_back(belief.x_hat.translation());

    VisualSource visual;
    if (mode != RunMode::LidarOnly && fr.camera && !fr.visual_factors.empty()) {
      visual.available = true;
      visual.build = [&fr](const Pose& p) { return build_visual(fr.visual_factors, p); };
    }

    FrameResult res = fuse_frame(belief, lidar, visual, policy,
                                 batch ? &*batch : &empty_batch, fr.index);
    belief = res.belief;
    if (res.report.any()) {
      ++rec.metrics.degenerate_frames;
    } else {
      ++rec.metrics.clean_frames;
    }
    rec.metrics.per_frame_visual_us.push_back(res.stats.visual_us);
    rec.stats.push_back(res.stats);
    rec.reports.push_back(res.report);
    rec.estimates.push_back(belief.x_hat);
    rec.truths.push_back(fr.truth);
    rec.times.push_back(fr.t);
  }
  rec.metrics.ate_rmse = ate_rmse(rec.estimates, rec.truths);
  rec.metrics.end_to_end = end_to_end_error(rec.estimates, rec.truths);
  return rec;
}

std::string ellipsoid_rows(std::size_t frame, const InfoForm& lidar, const Vec3& center) {
  const Thresholds th;
  const Ellipsoid cov = report_to_ellipsoid(detect_cov_schur(lidar, th), center);
  const Ellipsoid hes = report_to_ellipsoid(detect_block_hessian(lidar, th), center);
  return ellipsoid_row(frame, "CovSchur", cov) + "\n" + ellipsoid_row(frame, "BlockHessian", hes) +
         "\n";
}

void write_run_outputs(const RunConfig& cfg, const ScenarioTrace& trace, const RunRecord& rec) {
  const fs::path dir = cfg.output_dir;
  ensure_dir(dir);

  {
    OutFile f(dir / "metrics.txt");
    f.line("scenario {}", trace.name);
    f.line("seed {}", trace.seed);
    f.line("mode {}", to_string(cfg.mode));
    f.line("detector {}", to_string(cfg.detector.method));
    f.line("theta_r_rad2 {:.17g}", cfg.detector.thresholds.theta_r);
    f.line("theta_t_m2 {:.17g}", cfg.detector.thresholds.theta_t);
    f.line("frames {}", rec.stats.size());
    f.line("ate_rmse_m {:.17g}", rec.metrics.ate_rmse);
    f.line("end_to_end_m {:.17g}", rec.metrics.end_to_end);
    f.line("degenerate_frames {}", rec.metrics.degenerate_frames);
    f.line("clean_frames {}", rec.metrics.clean_frames);
    f.close();
  }
  {
    OutFile f(dir / "frames.csv");
    f.line("frame,t,branch,selected_dims,regularized,posterior_trace");
    for (std::size_t i = 0; i < rec.stats.size(); ++i) {
      const auto& s = rec.stats[i];
      f.line("{},{:.9g},{},{},{},{:.17g}", s.frame, rec.times[i], to_string(s.branch),
             s.selected_dims, int(s.regularized), s.posterior_trace);
    }
    f.close();
  }
  if (cfg.write_timing) {
    OutFile f(dir / "timing.csv");
    f.line("frame,visual_us");
    for (const auto& s : rec.stats) f.line("{},{:.3f}", s.frame, s.visual_us);
    f.close();
  }
  {
    OutFile f(dir / "flags.csv");
    f.line("frame,method,rot0,rot1,rot2,trans0,trans1,trans2,total,"
           "rot_x,rot_y,rot_z,trans_x,trans_y,trans_z");
    for (std::size_t i = 0; i < rec.reports.size(); ++i) {
      f.line("{}", flags_row(rec.stats[i].frame, rec.reports[i]));
    }
    f.close();
  }
  {
    OutFile f(dir / "reports.txt");
    for (std::size_t i = 0; i < rec.reports.size(); ++i) {
      f.line("{}", format_report_line(rec.stats[i].frame, rec.reports[i]));
    }
    f.close();
  }
  {
    OutFile f(dir / "trajectory.csv");
    f.line("frame,t,est_x,est_y,est_z,true_x,true_y,true_z");
    for (std::size_t i = 0; i < rec.estimates.size(); ++i) {
      const Vec3& e = rec.estimates[i].translation();
      const Vec3& g = rec.truths[i].translation();
      f.line("{},{:.9g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", rec.stats[i].frame,
             rec.times[i], e.x(), e.y(), e.z(), g.x(), g.y(), g.z());
    }
    f.close();
  }
  {
    OutFile f(dir / "lidar_info.txt");
    for (std::size_t i = 0; i < rec.lidar_info.size(); ++i) {
      const Vec3& c = rec.lidar_centers[i];
      if (!rec.lidar_info[i]) {
        f.line("{} none", rec.stats[i].frame);
        continue;
      }
      std::string s = fmt::format("{} {:.17g} {:.17g} {:.17g}", rec.stats[i].frame, c.x(), c.y(),
                                  c.z());
      const Mat6& m = rec.lidar_info[i]->info.matrix();
      for (int r = 0; r < 6; ++r)
        for (int k = 0; k < 6; ++k) s += fmt::format(" {:.17g}", m(r, k));
      f.line("{}", s);
    }
    f.close();
  }
  {
    OutFile f(dir / "ellipsoids.csv");
    f.line("{}", kEllipsoidHeader);
    for (std::size_t i = 0; i < rec.lidar_info.size(); ++i) {
      if (rec.lidar_info[i]) {
        f.raw(ellipsoid_rows(rec.stats[i].frame, *rec.lidar_info[i], rec.lidar_centers[i]));
      }
    }
    f.close();
  }
}

RunMetrics run(const RunConfig& cfg) {
  cfg.detector.thresholds.validate();
  const ScenarioTrace trace = load_or_generate(cfg);
  const RunRecord rec = execute(trace, cfg.mode, cfg.detector);
  write_run_outputs(cfg, trace, rec);
  return rec.metrics;
}

const ComparisonRow& ComparisonTable::find(std::string_view label) const {
  for (const auto& r : rows) {
    if (r.label == label) return r;
  }
  throw InvalidArgument("no comparison row '" + std::string(label) + "'");
}

ComparisonTable compare_detectors(const RunConfig& base) {
  base.detector.thresholds.validate();
  const ScenarioTrace trace = load_or_generate(base);

  std::vector<RunConfig> cfgs;
  std::vector<std::string> labels;
  for (auto m : {DetectorMethod::CovSchur, DetectorMethod::BlockHessian,
                 DetectorMethod::ConditionNumber, DetectorMethod::NormalizedHessian}) {
    RunConfig c = base;
    c.mode = RunMode::Selective;
    c.detector.method = m;
    labels.push_back(fmt::format("Selective-{}", to_string(m)));
    cfgs.push_back(c);
  }
  for (auto mode : {RunMode::AllIn, RunMode::LidarOnly}) {
    RunConfig c = base;
    c.mode = mode;
    c.detector.method = DetectorMethod::CovSchur;
    labels.push_back(std::string(to_string(mode)));
    cfgs.push_back(c);
  }
  for (std::size_t i = 0; i < cfgs.size(); ++i) cfgs[i].output_dir = base.output_dir / labels[i];

  std::vector<RunRecord> records(cfgs.size());
  const auto n = static_cast<std::int64_t>(cfgs.size());
  // Independent runs; each writes only to its own subdirectory.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& c = cfgs[static_cast<std::size_t>(i)];
    records[static_cast<std::size_t>(i)] = execute(trace, c.mode, c.detector);
  }
  for (std::size_t i = 0; i < cfgs.size(); ++i) write_run_outputs(cfgs[i], trace, records[i]);

  ComparisonTable table;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    table.rows.push_back({labels[i], cfgs[i].mode, cfgs[i].detector.method, records[i].metrics});
  }

  ensure_dir(base.output_dir);
  {
    OutFile f(base.output_dir / "compare.csv");
    f.line("label,mode,detector,ate_rmse_m,end_to_end_m,degenerate_frames,clean_frames");
    for (const auto& r : table.rows) {
      f.line("{},{},{},{:.17g},{:.17g},{},{}", r.label, to_string(r.mode), to_string(r.detector),
             r.metrics.ate_rmse, r.metrics.end_to_end, r.metrics.degenerate_frames,
             r.metrics.clean_frames);
    }
    f.close();
  }
  {
    OutFile f(base.output_dir / "flags_timeline.csv");
    std::string header = "frame";
    for (std::size_t d = 0; d < 4; ++d) {
      for (const char* slot : {"r0", "r1", "r2", "t0", "t1", "t2"}) {
        header += fmt::format(",{}_{}", to_string(cfgs[d].detector.method), slot);
      }
    }
    f.line("{}", header);
    const std::size_t frames = records.front().reports.size();
    for (std::size_t k = 0; k < frames; ++k) {
      std::string row = fmt::format("{}", records.front().stats[k].frame);
      for (std::size_t d = 0; d < 4; ++d) {
        for (bool b : records[d].reports[k].slots()) row += b ? ",1" : ",0";
      }
      f.line("{}", row);
    }
    f.close();
  }
  return table;
}

void emit_ellipsoids(const fs::path& run_dir) {
  const fs::path src = run_dir / "lidar_info.txt";
  std::ifstream in(src);
  if (!in) throw MissingArtifacts("missing " + src.string());
  OutFile f(run_dir / "ellipsoids.csv");
  f.line("{}", kEllipsoidHeader);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t frame = 0;
    std::string tok;
    if (!(ls >> frame >> tok)) throw MissingArtifacts("malformed lidar_info line: " + line);
    if (tok == "none") continue;
    try {
      Vec3 c;
      c.x() = std::stod(tok);
      ls >> c.y() >> c.z();
      Mat6 m;
      for (int r = 0; r < 6; ++r)
        for (int k = 0; k < 6; ++k) ls >> m(r, k);
      if (!ls) throw MissingArtifacts("truncated lidar_info line");
      InfoForm info;
      info.info = SymMatrix6(m);
      f.raw(ellipsoid_rows(frame, info, c));
    } catch (const std::logic_error&) {
      throw MissingArtifacts("malformed lidar_info line: " + line);
    }
  }
  f.close();
}

}  // namespace skf
