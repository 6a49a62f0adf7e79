#include "skf/state.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace skf {

AngleOverflow::AngleOverflow(double angle)
    : Error("relative rotation angle " + std::to_string(angle) +
            " rad is too close to pi"),
      angle_(angle) {}

NotSymmetric::NotSymmetric(double asymmetry)
    : Error("matrix is not symmetric (relative asymmetry " +
            std::to_string(asymmetry) + ")"),
      asymmetry_(asymmetry) {}

NearSingular::NearSingular(double min_eigenvalue, double max_eigenvalue)
    : Error("matrix is near singular (eigenvalues in [" +
            std::to_string(min_eigenvalue) + ", " +
            std::to_string(max_eigenvalue) + "])"),
      min_(min_eigenvalue),
      max_(max_eigenvalue) {}

namespace {

std::string join_indices(const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(idx[i]);
  }
  return s;
}

template <int N>
void canonicalize_signs(Eigen::Matrix<double, N, N>& vecs) {
  for (int c = 0; c < N; ++c) {
    for (int r = 0; r < N; ++r) {
      if (std::abs(vecs(r, c)) > 1e-12) {
        if (vecs(r, c) < 0) vecs.col(c) *= -1.0;
        break;
      }
    }
  }
}

template <int N>
SymEigen<N> sym_eigen_impl(const Eigen::Matrix<double, N, N>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> solver(m);
  SymEigen<N> out;
  // Eigen returns ascending order.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_signs<N>(out.vectors);
  return out;
}

}  // namespace

BehindCamera::BehindCamera(std::vector<std::size_t> indices)
    : Error("landmarks behind camera: " + join_indices(indices)),
      indices_(std::move(indices)) {}

double relative_asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

template <int N>
SymMatrix<N>::SymMatrix(const Matrix& m) {
  if (!m.allFinite()) throw InvalidArgument("symmetric matrix has non-finite entries");
  const double asym = relative_asymmetry(m);
  if (asym > 1e-9) throw NotSymmetric(asym);
  m_ = 0.5 * (m + m.transpose());
}

template class SymMatrix<3>;
template class SymMatrix<6>;

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InvalidArgument("pose has non-finite entries");
  }
  const double ortho =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw InvalidArgument("pose rotation is not a proper rotation matrix");
  }
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Mat3 so3_exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  if (theta2 < 1e-16) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Mat3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  // vee of the antisymmetric part equals sin(theta) * axis.
  const Vec3 v(0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)),
               0.5 * (r(1, 0) - r(0, 1)));
  const double s = v.norm();
  const double theta = std::atan2(s, c);
  if (c > 0.0 && s < 1e-12) return v;
  if (s > 1e-6 || c > 0.0) return v * (theta / s);

  // Near pi: axis from a a^T = (R_sym - c I) / (1 - c).
  const Mat3 aat = (0.5 * (r + r.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(v) < 0.0) axis = -axis;
  return theta * axis;
}

Pose boxplus(const Pose& x, const ErrorState& d) {
  return Pose(x.rotation() * so3_exp(d.rot()), x.translation() + d.trans());
}

ErrorState boxminus(const Pose& a, const Pose& b) {
  const Mat3 rel = b.rotation().transpose() * a.rotation();
  const Vec3 w = so3_log(rel);
  const double angle = w.norm();
  if (angle >= std::numbers::pi - 1e-6) throw AngleOverflow(angle);
  return ErrorState(w, a.translation() - b.translation());
}

SymEigen<3> sym_eigen(const SymMatrix3& m) { return sym_eigen_impl<3>(m.matrix()); }
SymEigen<6> sym_eigen(const SymMatrix6& m) { return sym_eigen_impl<6>(m.matrix()); }

bool is_well_conditioned(const SymMatrix6& m, double rel_floor) {
  const Eigen::SelfAdjointEigenSolver<Mat6> solver(m.matrix(), Eigen::EigenvaluesOnly);
  const double lo = solver.eigenvalues()(0);
  const double hi = solver.eigenvalues()(5);
  return hi > 0.0 && lo > rel_floor * hi;
}

SymMatrix6 invert_spd(const SymMatrix6& m) {
  const Eigen::SelfAdjointEigenSolver<Mat6> solver(m.matrix(), Eigen::EigenvaluesOnly);
  const double lo = solver.eigenvalues()(0);
  const double hi = solver.eigenvalues()(5);
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) throw NearSingular(lo, hi);
  const Eigen::LLT<Mat6> llt(m.matrix());
  if (llt.info() != Eigen::Success) throw NearSingular(lo, hi);
  return SymMatrix6::symmetrized(llt.solve(Mat6::Identity()));
}

}  // namespace skf
