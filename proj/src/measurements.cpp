#include "skf/measurements.hpp"

#include <cmath>
#include <vector>

namespace skf {

namespace {

using JacobianRows = Eigen::Matrix<double, Eigen::Dynamic, 6>;

inline Eigen::Matrix<double, 1, 6> point_plane_row(const PointPlaneFactor& f,
                                                   const Pose& pose, double& residual) {
  const Vec3& n = f.plane_normal;
  residual = f.plane_offset - n.dot(pose.transform(f.point_body));
  Eigen::Matrix<double, 1, 6> row;
  row.head<3>() = -n.transpose() * pose.rotation() * skew(f.point_body);
  row.tail<3>() = n.transpose();
  return row;
}

// Fills rows 2i, 2i+1. Returns false when the landmark is behind the camera.
inline bool reprojection_rows(const VisualFactor& f, const Pose& pose,
                              Eigen::Matrix<double, 2, 6>& rows, Vec2& residual) {
  const Vec3 pc = pose.inverse_transform(f.landmark_world);
  if (!(pc.z() > 1e-3)) return false;
  const double iz = 1.0 / pc.z();
  Eigen::Matrix<double, 2, 3> proj;
  proj << iz, 0.0, -pc.x() * iz * iz,
          0.0, iz, -pc.y() * iz * iz;
  rows.leftCols<3>() = proj * skew(pc);
  rows.rightCols<3>() = -proj * pose.rotation().transpose();
  residual = f.pixel_obs - Vec2(pc.x() * iz, pc.y() * iz);
  return true;
}

InfoForm finish(const Mat6& lower, const Vec6& vec) {
  InfoForm out;
  Mat6 full = lower.selfadjointView<Eigen::Lower>();
  out.info = SymMatrix6::symmetrized(full);
  out.vec = vec;
  return out;
}

void accumulate(const JacobianRows& jac, const Eigen::VectorXd& res,
                const Eigen::VectorXd& var, Eigen::Index begin, Eigen::Index end,
                Mat6& lower, Vec6& vec) {
  for (Eigen::Index i = begin; i < end; ++i) {
    const double w = 1.0 / var(i);
    const Vec6 h = jac.row(i).transpose();
    lower.selfadjointView<Eigen::Lower>().rankUpdate(h, w);
    vec += (w * res(i)) * h;
  }
}

template <class Batch>
InfoForm reduce_parallel(const Batch& batch) {
  if (!batch.consistent()) throw InvalidArgument("inconsistent measurement batch");
  const Eigen::Index m = batch.rows();
  const Eigen::Index chunks = (m + kReduceChunkRows - 1) / kReduceChunkRows;
  std::vector<Mat6> lowers(static_cast<std::size_t>(chunks), Mat6::Zero());
  std::vector<Vec6> vecs(static_cast<std::size_t>(chunks), Vec6::Zero());

#pragma omp parallel for schedule(static) if (chunks > 1)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * kReduceChunkRows;
    const Eigen::Index end = std::min(m, begin + kReduceChunkRows);
    accumulate(batch.jacobian, batch.residual, batch.variance, begin, end,
               lowers[static_cast<std::size_t>(c)], vecs[static_cast<std::size_t>(c)]);
  }

  Mat6 lower = Mat6::Zero();
  Vec6 vec = Vec6::Zero();
  for (Eigen::Index c = 0; c < chunks; ++c) {
    lower += lowers[static_cast<std::size_t>(c)];
    vec += vecs[static_cast<std::size_t>(c)];
  }
  return finish(lower, vec);
}

}  // namespace

void validate(const PointPlaneFactor& f) {
  if (!f.point_body.allFinite() || !f.plane_normal.allFinite() ||
      !std::isfinite(f.plane_offset)) {
    throw InvalidArgument("point-plane factor has non-finite fields");
  }
  if (std::abs(f.plane_normal.norm() - 1.0) > 1e-9) {
    throw InvalidArgument("point-plane factor normal is not unit length");
  }
  if (!(f.noise_sigma > 0.0)) throw InvalidArgument("point-plane noise_sigma must be > 0");
}

void validate(const VisualFactor& f) {
  if (!f.landmark_world.allFinite() || !f.pixel_obs.allFinite()) {
    throw InvalidArgument("visual factor has non-finite fields");
  }
  if (!(f.noise_sigma > 0.0)) throw InvalidArgument("visual noise_sigma must be > 0");
}

double point_plane_residual(const PointPlaneFactor& f, const Pose& pose) {
  return f.plane_offset - f.plane_normal.dot(pose.transform(f.point_body));
}

Vec2 reprojection_residual(const VisualFactor& f, const Pose& pose) {
  const Vec3 pc = pose.inverse_transform(f.landmark_world);
  return f.pixel_obs - Vec2(pc.x() / pc.z(), pc.y() / pc.z());
}

LidarBatch linearize_point_plane(std::span<const PointPlaneFactor> factors,
                                 const Pose& lin_pose) {
  if (factors.empty()) throw InvalidArgument("lidar batch needs at least one factor");
  for (const auto& f : factors) validate(f);
  const auto m = static_cast<Eigen::Index>(factors.size());
  LidarBatch out;
  out.jacobian.resize(m, 6);
  out.residual.resize(m);
  out.variance.resize(m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& f = factors[static_cast<std::size_t>(i)];
    double r = 0.0;
    out.jacobian.row(i) = point_plane_row(f, lin_pose, r);
    out.residual(i) = r;
    out.variance(i) = f.noise_sigma * f.noise_sigma;
  }
  return out;
}

VisualBatch linearize_visual(std::span<const VisualFactor> factors, const Pose& lin_pose) {
  for (const auto& f : factors) validate(f);
  const auto n = static_cast<Eigen::Index>(factors.size());
  VisualBatch out;
  out.jacobian.resize(2 * n, 6);
  out.residual.resize(2 * n);
  out.variance.resize(2 * n);
  std::vector<char> behind(factors.size(), 0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = factors[static_cast<std::size_t>(i)];
    Eigen::Matrix<double, 2, 6> rows;
    Vec2 r;
    if (!reprojection_rows(f, lin_pose, rows, r)) {
      behind[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    out.jacobian.middleRows<2>(2 * i) = rows;
    out.residual.segment<2>(2 * i) = r;
    out.variance.segment<2>(2 * i).setConstant(f.noise_sigma * f.noise_sigma);
  }
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < behind.size(); ++i) {
    if (behind[i]) bad.push_back(i);
  }
  if (!bad.empty()) throw BehindCamera(std::move(bad));
  return out;
}

InfoForm reduce_lidar(const LidarBatch& batch) { return reduce_parallel(batch); }
InfoForm reduce_visual(const VisualBatch& batch) { return reduce_parallel(batch); }

namespace serial {

LidarBatch linearize_point_plane(std::span<const PointPlaneFactor> factors,
                                 const Pose& lin_pose) {
  if (factors.empty()) throw InvalidArgument("lidar batch needs at least one factor");
  LidarBatch out;
  const auto m = static_cast<Eigen::Index>(factors.size());
  out.jacobian.resize(m, 6);
  out.residual.resize(m);
  out.variance.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& f = factors[static_cast<std::size_t>(i)];
    validate(f);
    double r = 0.0;
    out.jacobian.row(i) = point_plane_row(f, lin_pose, r);
    out.residual(i) = r;
    out.variance(i) = f.noise_sigma * f.noise_sigma;
  }
  return out;
}

VisualBatch linearize_visual(std::span<const VisualFactor> factors, const Pose& lin_pose) {
  const auto n = static_cast<Eigen::Index>(factors.size());
  VisualBatch out;
  out.jacobian.resize(2 * n, 6);
  out.residual.resize(2 * n);
  out.variance.resize(2 * n);
  std::vector<std::size_t> bad;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = factors[static_cast<std::size_t>(i)];
    validate(f);
    Eigen::Matrix<double, 2, 6> rows;
    Vec2 r;
    if (!reprojection_rows(f, lin_pose, rows, r)) {
      bad.push_back(static_cast<std::size_t>(i));
      continue;
    }
    out.jacobian.middleRows<2>(2 * i) = rows;
    out.residual.segment<2>(2 * i) = r;
    out.variance.segment<2>(2 * i).setConstant(f.noise_sigma * f.noise_sigma);
  }
  if (!bad.empty()) throw BehindCamera(std::move(bad));
  return out;
}

InfoForm reduce(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 6>>& jacobian,
                const Eigen::Ref<const Eigen::VectorXd>& residual,
                const Eigen::Ref<const Eigen::VectorXd>& variance) {
  const Eigen::VectorXd w = variance.cwiseInverse();
  InfoForm out;
  out.info = SymMatrix6::symmetrized(jacobian.transpose() * w.asDiagonal() * jacobian);
  out.vec = jacobian.transpose() * w.cwiseProduct(residual);
  return out;
}

}  // namespace serial

}  // namespace skf
