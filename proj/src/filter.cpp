#include "skf/filter.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>
#include <chrono>

namespace skf {

std::string_view to_string(FusionBranch b) {
  switch (b) {
    case FusionBranch::NoVisual: return "no_visual";
    case FusionBranch::SkippedClean: return "skipped";
    case FusionBranch::Selective: return "selective";
    case FusionBranch::AllIn: return "all_in";
  }
  return "unknown";
}

std::string format_frame_stats(const FrameStats& s) {
  return fmt::format("{} {} {:.3f} {:.17g} {} {}", s.frame, to_string(s.branch), s.visual_us,
                     s.posterior_trace, s.selected_dims, s.regularized ? 1 : 0);
}

VisualSource VisualSource::ready(InfoForm info) {
  return {true, [info = std::move(info)](const Pose&) { return info; }};
}

BeliefState predict(const BeliefState& belief, const ErrorState& motion_delta,
                    const SymMatrix6& q_process) {
  Mat6 f = Mat6::Identity();
  f.block<3, 3>(kRot, kRot) = so3_exp(-motion_delta.rot());
  BeliefState out;
  out.x_hat = boxplus(belief.x_hat, motion_delta);
  out.P = SymMatrix6::symmetrized(f * belief.P.matrix() * f.transpose() +
                                  q_process.matrix());
  return out;
}

BeliefState update_standard(const BeliefState& belief, const InfoForm& m) {
  if (!is_well_conditioned(belief.P)) {
    throw PriorSingular("prior covariance is not invertible");
  }
  const Mat6& p = belief.P.matrix();
  const Mat6 p_inv = invert_spd(belief.P).matrix();
  const Mat6 a = m.info.matrix() + p_inv;
  const Eigen::LLT<Mat6> llt(a);
  if (llt.info() != Eigen::Success) throw PriorSingular("posterior information not SPD");
  const Mat6 a_inv = llt.solve(Mat6::Identity());

  // Error-state update around x_hat (delta_0 = 0).
  const Vec6 delta = a_inv * m.vec;
  BeliefState out;
  out.x_hat = boxplus(belief.x_hat, ErrorState(delta));
  out.P = SymMatrix6::symmetrized((Mat6::Identity() - a_inv * m.info.matrix()) * p);
  return out;
}

BeliefState update_selective(const BeliefState& belief, const SelectedVisual& sel) {
  return update_standard(belief, sel.system);
}

FrameResult fuse_frame(const BeliefState& belief, const InfoForm& lidar,
                       const VisualSource& visual, const FusionPolicyConfig& cfg,
                       const LidarBatch* raw_lidar, std::size_t frame) {
  FrameResult out;
  out.stats.frame = frame;
  out.belief = update_standard(belief, lidar);
  out.report = detect(cfg.detector, lidar, raw_lidar);

  if (!visual.available) {
    out.stats.branch = FusionBranch::NoVisual;
  } else if (cfg.enable_selective && !out.report.any()) {
    out.stats.branch = FusionBranch::SkippedClean;
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    const InfoForm vis = visual.build(out.belief.x_hat);
    if (cfg.enable_selective) {
      const SelectionMatrix s = build_selection(out.report);
      const SelectedVisual sel = select_visual(vis, build_basis(out.report), s);
      out.belief = update_selective(out.belief, sel);
      out.stats.branch = FusionBranch::Selective;
      out.stats.selected_dims = s.rank();
      out.stats.regularized = sel.regularized;
    } else {
      out.belief = update_standard(out.belief, vis);
      out.stats.branch = FusionBranch::AllIn;
      out.stats.selected_dims = 6;
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.stats.visual_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
  }
  out.stats.posterior_trace = out.belief.P.trace();
  return out;
}

}  // namespace skf
