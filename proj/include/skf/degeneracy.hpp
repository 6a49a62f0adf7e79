#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "skf/measurements.hpp"
#include "skf/state.hpp"

namespace skf {

enum class DetectorMethod { CovSchur, BlockHessian, ConditionNumber, NormalizedHessian };

std::string_view to_string(DetectorMethod m);
/// Throws InvalidArgument for unknown names.
DetectorMethod parse_detector(std::string_view name);

/// Variance thresholds for rotation (rad^2) and translation (m^2).
/// Hessian-based detectors use the reciprocals.
struct Thresholds {
  double theta_r = kDefaultThetaR;
  double theta_t = kDefaultThetaT;

  static constexpr double kDefaultThetaR =
      (2.0 * 3.14159265358979323846 / 180.0) * (2.0 * 3.14159265358979323846 / 180.0);
  static constexpr double kDefaultThetaT = 0.1 * 0.1;

  void validate() const;
};

/// Per-block localizability result shared by all detectors. Eigenvalues are
/// covariance-flavored (rad^2, m^2) for CovSchur and information-flavored
/// (rad^-2, m^-2) for the Hessian methods; both sorted descending.
struct DegeneracyReport {
  DetectorMethod method = DetectorMethod::CovSchur;
  Vec3 rot_eigvals = Vec3::Zero();
  Mat3 rot_eigvecs = Mat3::Identity();
  Vec3 trans_eigvals = Vec3::Zero();
  Mat3 trans_eigvecs = Mat3::Identity();
  std::array<bool, 3> rot_flags{};
  std::array<bool, 3> trans_flags{};
  // Set when the information matrix could not be inverted or filtered and
  // every direction was declared degenerate.
  bool total = false;

  bool any() const;
  int flag_count() const;
  /// Flags in selection-slot order: rotation 0..2, translation 3..5.
  std::array<bool, 6> slots() const;
  bool covariance_flavored() const { return method == DetectorMethod::CovSchur; }
};

struct DetectorConfig {
  DetectorMethod method = DetectorMethod::CovSchur;
  Thresholds thresholds;
  double kappa_max = kDefaultKappaMax;
  double contrib_floor = kDefaultContribFloor;

  static constexpr double kDefaultKappaMax = 1e4;
  static constexpr double kDefaultContribFloor = 0.1;
};

DegeneracyReport detect_cov_schur(const InfoForm& lidar, const Thresholds& th);
DegeneracyReport detect_block_hessian(const InfoForm& lidar, const Thresholds& th);
DegeneracyReport detect_condition_number(const InfoForm& lidar, double kappa_max);
DegeneracyReport detect_normalized_hessian(const LidarBatch& batch, const Thresholds& th,
                                           double contrib_floor);

/// Runs the configured detector. NormalizedHessian needs the raw batch and
/// throws InvalidArgument without one.
DegeneracyReport detect(const DetectorConfig& cfg, const InfoForm& lidar,
                        const LidarBatch* batch);

/// Translational uncertainty ellipsoid.
struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  Vec3 radii = Vec3::Zero();  // descending
};

inline constexpr double kDefaultRadiusCap = 50.0;

/// Radii are square roots of translational variances; information-flavored
/// reports are reciprocated first.
Ellipsoid report_to_ellipsoid(const DegeneracyReport& rep, const Vec3& center,
                              double radius_cap = kDefaultRadiusCap);

/// One record per line: frame, method, 6 eigenvalues, 6 flags, total flag,
/// 18 eigenvector entries (rotation then translation, column-major).
std::string format_report_line(std::size_t frame, const DegeneracyReport& rep);
/// Inverse of format_report_line. Throws InvalidArgument on malformed input.
DegeneracyReport parse_report_line(std::string_view line, std::size_t* frame = nullptr);

}  // namespace skf
