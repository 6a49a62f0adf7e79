#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "skf/degeneracy.hpp"
#include "skf/measurements.hpp"
#include "skf/selection.hpp"
#include "skf/state.hpp"

namespace skf {

/// Estimate and error-state covariance (rad^2, m^2, rad*m cross terms).
struct BeliefState {
  Pose x_hat;
  SymMatrix6 P = SymMatrix6::identity();
};

struct FusionPolicyConfig {
  DetectorConfig detector;
  bool enable_selective = true;  // false: fuse every visual frame ("all-in")
};

enum class FusionBranch {
  NoVisual,      // no visual measurements offered this frame
  SkippedClean,  // selective mode, LiDAR not degenerate
  Selective,     // selective update along flagged directions
  AllIn,         // full visual update
};

std::string_view to_string(FusionBranch b);

struct FrameStats {
  std::size_t frame = 0;
  FusionBranch branch = FusionBranch::NoVisual;
  double visual_us = 0.0;  // wall time of the visual path
  double posterior_trace = 0.0;
  int selected_dims = 0;
  bool regularized = false;
};

/// One whitespace-separated record: frame, branch, visual_us,
/// posterior_trace, selected_dims, regularized.
std::string format_frame_stats(const FrameStats& s);

struct FrameResult {
  BeliefState belief;
  DegeneracyReport report;
  FrameStats stats;
};

/// Lazily built visual information. The builder receives the estimate after
/// the LiDAR update as its linearization pose; it only runs on branches that
/// consume it, and its cost is part of the timed visual path.
struct VisualSource {
  bool available = false;
  std::function<InfoForm(const Pose&)> build;

  static VisualSource none() { return {}; }
  static VisualSource ready(InfoForm info);
};

BeliefState predict(const BeliefState& belief, const ErrorState& motion_delta,
                    const SymMatrix6& q_process);

/// Information-form Kalman update with the residual expressed at x_hat.
/// Throws PriorSingular when P fails the conditioning test.
BeliefState update_standard(const BeliefState& belief, const InfoForm& m);
BeliefState update_selective(const BeliefState& belief, const SelectedVisual& sel);

/// LiDAR update, detection on the LiDAR information, then the visual branch
/// chosen by the policy. `raw_lidar` is required by NormalizedHessian.
FrameResult fuse_frame(const BeliefState& belief, const InfoForm& lidar,
                       const VisualSource& visual, const FusionPolicyConfig& cfg,
                       const LidarBatch* raw_lidar = nullptr, std::size_t frame = 0);

inline FrameResult fuse_frame(const BeliefState& belief, const InfoForm& lidar,
                              const std::optional<InfoForm>& visual,
                              const FusionPolicyConfig& cfg,
                              const LidarBatch* raw_lidar = nullptr,
                              std::size_t frame = 0) {
  return fuse_frame(belief, lidar, visual ? VisualSource::ready(*visual) : VisualSource::none(),
                    cfg, raw_lidar, frame);
}

}  // namespace skf
