#pragma once

#include <Eigen/Core>
#include <span>

#include "skf/state.hpp"

namespace skf {

/// LiDAR point matched to a local plane n^T x = offset (world frame).
struct PointPlaneFactor {
  Vec3 point_body = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();
  double plane_offset = 0.0;
  double noise_sigma = 1.0;  // m
};

/// Landmark with known world position observed in normalized image
/// coordinates. The camera frame coincides with the body frame (x right,
/// y down, z along the optical axis).
struct VisualFactor {
  Vec3 landmark_world = Vec3::Zero();
  Vec2 pixel_obs = Vec2::Zero();
  double noise_sigma = 1.0;
};

/// Linearized system z = J * delta + noise with diagonal noise covariance.
/// `residual` is measured minus predicted; `jacobian` is the derivative of the
/// predicted measurement with respect to the error state.
template <class Tag>
struct MeasurementBatch {
  Eigen::Matrix<double, Eigen::Dynamic, 6> jacobian;
  Eigen::VectorXd residual;
  Eigen::VectorXd variance;

  Eigen::Index rows() const { return jacobian.rows(); }
  bool consistent() const {
    return residual.size() == jacobian.rows() && variance.size() == jacobian.rows() &&
           (variance.array() > 0.0).all();
  }
};

struct LidarTag {};
struct VisualTag {};
using LidarBatch = MeasurementBatch<LidarTag>;
using VisualBatch = MeasurementBatch<VisualTag>;

/// Information form of a measurement batch: info = J^T W J, vec = J^T W z.
struct InfoForm {
  SymMatrix6 info;
  Vec6 vec = Vec6::Zero();

  static InfoForm zero() { return {}; }
  InfoForm& operator+=(const InfoForm& o) {
    info = SymMatrix6::symmetrized(info.matrix() + o.info.matrix());
    vec += o.vec;
    return *this;
  }
};

void validate(const PointPlaneFactor& f);
void validate(const VisualFactor& f);

/// One row per factor: [n^T (-R [p]x), n^T], residual offset - n^T (R p + t).
/// Throws InvalidArgument for an empty list or invalid factor.
LidarBatch linearize_point_plane(std::span<const PointPlaneFactor> factors,
                                 const Pose& lin_pose);

/// Two rows per factor (u, v reprojection). Throws BehindCamera listing every
/// factor with camera depth <= 1e-3 m at lin_pose.
VisualBatch linearize_visual(std::span<const VisualFactor> factors, const Pose& lin_pose);

InfoForm reduce_lidar(const LidarBatch& batch);
InfoForm reduce_visual(const VisualBatch& batch);

/// Nonlinear residuals used by the linearizers, exposed for finite-difference
/// checks.
double point_plane_residual(const PointPlaneFactor& f, const Pose& pose);
Vec2 reprojection_residual(const VisualFactor& f, const Pose& pose);

/// Rows per chunk in the parallel reduction. Partial sums are combined in
/// chunk order, so the result does not depend on the thread count.
inline constexpr Eigen::Index kReduceChunkRows = 256;

/// Single-threaded reference kernels kept for testing and benchmarking.
namespace serial {
LidarBatch linearize_point_plane(std::span<const PointPlaneFactor> factors,
                                 const Pose& lin_pose);
VisualBatch linearize_visual(std::span<const VisualFactor> factors, const Pose& lin_pose);
InfoForm reduce(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 6>>& jacobian,
                const Eigen::Ref<const Eigen::VectorXd>& residual,
                const Eigen::Ref<const Eigen::VectorXd>& variance);
}  // namespace serial

}  // namespace skf
