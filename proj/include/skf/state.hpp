#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "skf/errors.hpp"

namespace skf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Error-state layout: rotation first, then translation.
inline constexpr int kRot = 0;
inline constexpr int kTrans = 3;

/// 6-vector perturbation: [0..2] axis-angle rotation (rad, body frame),
/// [3..5] translation (m, world frame).
struct ErrorState {
  Vec6 delta = Vec6::Zero();

  ErrorState() = default;
  explicit ErrorState(const Vec6& d) : delta(d) {}
  ErrorState(const Vec3& rot, const Vec3& trans) {
    delta << rot, trans;
  }

  auto rot() const { return delta.segment<3>(kRot); }
  auto trans() const { return delta.segment<3>(kTrans); }
  bool finite() const { return delta.allFinite(); }
};

/// Symmetric N x N matrix. The constructor rejects inputs whose asymmetry
/// exceeds 1e-9 relative to the largest entry (absolute below 1).
template <int N>
class SymMatrix {
 public:
  using Matrix = Eigen::Matrix<double, N, N>;

  SymMatrix() : m_(Matrix::Zero()) {}
  explicit SymMatrix(const Matrix& m);

  /// Averages m with its transpose; never throws.
  static SymMatrix symmetrized(const Matrix& m) {
    SymMatrix s;
    s.m_ = 0.5 * (m + m.transpose());
    return s;
  }
  static SymMatrix identity() { return symmetrized(Matrix::Identity()); }
  static SymMatrix zero() { return SymMatrix(); }

  const Matrix& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  double trace() const { return m_.trace(); }

 private:
  Matrix m_;
};

using SymMatrix3 = SymMatrix<3>;
using SymMatrix6 = SymMatrix<6>;

/// Asymmetry measure used by SymMatrix validation.
double relative_asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& m);

// Block views of a 6x6 matrix in rotation-first layout.
inline Mat3 block_rr(const Mat6& m) { return m.block<3, 3>(kRot, kRot); }
inline Mat3 block_rt(const Mat6& m) { return m.block<3, 3>(kRot, kTrans); }
inline Mat3 block_tr(const Mat6& m) { return m.block<3, 3>(kTrans, kRot); }
inline Mat3 block_tt(const Mat6& m) { return m.block<3, 3>(kTrans, kTrans); }

/// Rigid pose on SO(3) x R^3. Maps body-frame points to the world frame:
/// p_world = rotation * p_body + translation.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  /// Throws InvalidArgument unless rotation is orthonormal with det +1
  /// (tolerance 1e-9) and both inputs are finite.
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return {}; }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 transform(const Vec3& p_body) const {
    return rotation_ * p_body + translation_;
  }
  Vec3 inverse_transform(const Vec3& p_world) const {
    return rotation_.transpose() * (p_world - translation_);
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

Mat3 skew(const Vec3& v);
/// Rodrigues exponential of an axis-angle vector.
Mat3 so3_exp(const Vec3& w);
/// Principal logarithm; returns an axis-angle vector with norm in [0, pi].
Vec3 so3_log(const Mat3& r);

/// Right-perturbation retraction: R * exp(d_rot), t + d_trans.
Pose boxplus(const Pose& x, const ErrorState& d);
/// Inverse of boxplus. Throws AngleOverflow when the relative rotation angle
/// is at least pi - 1e-6.
ErrorState boxminus(const Pose& a, const Pose& b);

template <int N>
struct SymEigen {
  Eigen::Matrix<double, N, 1> values;   // descending
  Eigen::Matrix<double, N, N> vectors;  // orthonormal columns
};

/// Symmetric eigendecomposition with eigenvalues sorted descending and each
/// eigenvector's first non-negligible component made positive.
SymEigen<3> sym_eigen(const SymMatrix3& m);
SymEigen<6> sym_eigen(const SymMatrix6& m);

/// Inverse of a symmetric positive-definite 6x6 matrix. Throws NearSingular
/// (with eigenvalue diagnostics) when min eigenvalue <= 1e-12 * max.
SymMatrix6 invert_spd(const SymMatrix6& m);

/// Same validity test as invert_spd without throwing.
bool is_well_conditioned(const SymMatrix6& m, double rel_floor = 1e-12);

}  // namespace skf
