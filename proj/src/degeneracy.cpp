#include "skf/degeneracy.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace skf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Basis of one block with u (unit) among its columns: the complement of u is
// spanned by the eigenvectors of the block compressed onto it. Columns are
// ordered by descending Rayleigh quotient; returns the column holding u.
int basis_around(const Vec3& u, const Mat3& block, Mat3& vecs, Vec3& vals) {
  int k = 0;
  u.cwiseAbs().minCoeff(&k);
  Vec3 e = Vec3::Zero();
  e(k) = 1.0;
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = (e - e.dot(u) * u).normalized();
  b.col(1) = u.cross(b.col(0));
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(b.transpose() * block * b);
  const Eigen::Matrix<double, 3, 2> comp = b * solver.eigenvectors();

  std::array<std::pair<double, int>, 3> order{
      {{u.dot(block * u), 0}, {solver.eigenvalues()(1), 2}, {solver.eigenvalues()(0), 1}}};
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& c) { return a.first > c.first; });
  int slot = 0;
  for (int i = 0; i < 3; ++i) {
    const int src = order[static_cast<std::size_t>(i)].second;
    vals(i) = order[static_cast<std::size_t>(i)].first;
    vecs.col(i) = src == 0 ? u : Vec3(comp.col(src - 1));
    if (src == 0) slot = i;
  }
  return slot;
}

// Inverse through the eigendecomposition; used only on regularized input
// that invert_spd would reject.
Mat6 pseudo_inverse_spd(const Mat6& m) {
  const Eigen::SelfAdjointEigenSolver<Mat6> solver(m);
  Vec6 inv = Vec6::Zero();
  for (int i = 0; i < 6; ++i) {
    const double l = solver.eigenvalues()(i);
    inv(i) = l > 0.0 ? 1.0 / l : kInf;
  }
  return solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
}

void fill_block_eigen(const Mat3& rr, const Mat3& tt, DegeneracyReport& rep) {
  const auto er = sym_eigen(SymMatrix3::symmetrized(rr));
  const auto et = sym_eigen(SymMatrix3::symmetrized(tt));
  rep.rot_eigvals = er.values;
  rep.rot_eigvecs = er.vectors;
  rep.trans_eigvals = et.values;
  rep.trans_eigvecs = et.vectors;
}

void flag_information(const Thresholds& th, DegeneracyReport& rep) {
  for (int i = 0; i < 3; ++i) {
    rep.rot_flags[i] = rep.rot_eigvals(i) < 1.0 / th.theta_r;
    rep.trans_flags[i] = rep.trans_eigvals(i) < 1.0 / th.theta_t;
  }
}

void flag_all(DegeneracyReport& rep) {
  rep.rot_flags = {true, true, true};
  rep.trans_flags = {true, true, true};
  rep.total = true;
}

}  // namespace

std::string_view to_string(DetectorMethod m) {
  switch (m) {
    case DetectorMethod::CovSchur: return "CovSchur";
    case DetectorMethod::BlockHessian: return "BlockHessian";
    case DetectorMethod::ConditionNumber: return "ConditionNumber";
    case DetectorMethod::NormalizedHessian: return "NormalizedHessian";
  }
  return "unknown";
}

DetectorMethod parse_detector(std::string_view name) {
  for (auto m : {DetectorMethod::CovSchur, DetectorMethod::BlockHessian,
                 DetectorMethod::ConditionNumber, DetectorMethod::NormalizedHessian}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown detector '" + std::string(name) + "'");
}

void Thresholds::validate() const {
  if (!(theta_r > 0.0) || !(theta_t > 0.0)) {
    throw InvalidArgument("thresholds must be strictly positive");
  }
}

bool DegeneracyReport::any() const { return flag_count() > 0; }

int DegeneracyReport::flag_count() const {
  int n = 0;
  for (int i = 0; i < 3; ++i) n += rot_flags[i] + trans_flags[i];
  return n;
}

std::array<bool, 6> DegeneracyReport::slots() const {
  return {rot_flags[0],   rot_flags[1],   rot_flags[2],
          trans_flags[0], trans_flags[1], trans_flags[2]};
}

DegeneracyReport detect_cov_schur(const InfoForm& lidar, const Thresholds& th) {
  th.validate();
  DegeneracyReport rep;
  rep.method = DetectorMethod::CovSchur;
  try {
    const Mat6 cov = invert_spd(lidar.info).matrix();
    fill_block_eigen(block_rr(cov), block_tt(cov), rep);
    for (int i = 0; i < 3; ++i) {
      rep.rot_flags[i] = rep.rot_eigvals(i) > th.theta_r;
      rep.trans_flags[i] = rep.trans_eigvals(i) > th.theta_t;
    }
  } catch (const NearSingular&) {
    const double tr = lidar.info.trace();
    if (tr > 0.0) {
      const Mat6 reg = lidar.info.matrix() + (1e-12 * tr / 6.0) * Mat6::Identity();
      const Mat6 cov = pseudo_inverse_spd(reg);
      fill_block_eigen(block_rr(cov), block_tt(cov), rep);
    } else {
      rep.rot_eigvals.setConstant(kInf);
      rep.trans_eigvals.setConstant(kInf);
    }
    flag_all(rep);
  }
  return rep;
}

DegeneracyReport detect_block_hessian(const InfoForm& lidar, const Thresholds& th) {
  th.validate();
  DegeneracyReport rep;
  rep.method = DetectorMethod::BlockHessian;
  const Mat6& h = lidar.info.matrix();
  fill_block_eigen(block_rr(h), block_tt(h), rep);
  flag_information(th, rep);
  return rep;
}

DegeneracyReport detect_condition_number(const InfoForm& lidar, double kappa_max) {
  if (!(kappa_max > 1.0)) throw InvalidArgument("kappa_max must exceed 1");
  DegeneracyReport rep;
  rep.method = DetectorMethod::ConditionNumber;
  const Mat6& h = lidar.info.matrix();
  fill_block_eigen(block_rr(h), block_tt(h), rep);

  const auto full = sym_eigen(lidar.info);
  const double lmax = full.values(0);
  if (!(lmax > 0.0)) {
    flag_all(rep);
    return rep;
  }
  double lmin = full.values(5);
  if (!(lmin > 0.0)) lmin = 1e-300;
  if (lmax / lmin <= kappa_max) return rep;

  // The weakest 6-D direction mixes rotation and translation; attribute the
  // flag to whichever half dominates.
  const Vec6 u = full.vectors.col(5);
  const Vec3 ur = u.head<3>();
  const Vec3 ut = u.tail<3>();
  if (ur.norm() >= ut.norm()) {
    const int slot = basis_around(ur.normalized(), block_rr(h), rep.rot_eigvecs, rep.rot_eigvals);
    rep.rot_flags[static_cast<std::size_t>(slot)] = true;
  } else {
    const int slot =
        basis_around(ut.normalized(), block_tt(h), rep.trans_eigvecs, rep.trans_eigvals);
    rep.trans_flags[static_cast<std::size_t>(slot)] = true;
  }
  return rep;
}

DegeneracyReport detect_normalized_hessian(const LidarBatch& batch, const Thresholds& th,
                                           double contrib_floor) {
  th.validate();
  if (!batch.consistent()) throw InvalidArgument("inconsistent lidar batch");
  if (contrib_floor < 0.0) throw InvalidArgument("contrib_floor must be >= 0");
  DegeneracyReport rep;
  rep.method = DetectorMethod::NormalizedHessian;
  const Eigen::Index m = batch.rows();
  if (m == 0) {
    flag_all(rep);
    return rep;
  }

  // Candidate directions come from the physical (unnormalized) blocks.
  const InfoForm raw = serial::reduce(batch.jacobian, batch.residual, batch.variance);
  const auto cand_r = sym_eigen(SymMatrix3::symmetrized(block_rr(raw.info.matrix())));
  const auto cand_t = sym_eigen(SymMatrix3::symmetrized(block_tt(raw.info.matrix())));

  const double scale_r = batch.jacobian.leftCols<3>().rowwise().norm().maxCoeff();
  const double scale_t = batch.jacobian.rightCols<3>().rowwise().norm().maxCoeff();

  auto filtered_half = [contrib_floor](const Vec3& h, double scale, const Mat3& dirs) {
    const double n = h.norm();
    if (!(scale > 0.0) || n <= 1e-15 * scale) return Vec3(Vec3::Zero());
    Vec3 hn = h / n;
    for (int k = 0; k < 3; ++k) {
      const Vec3 v = dirs.col(k);
      if (std::abs(h.dot(v)) / scale < contrib_floor) hn -= hn.dot(v) * v;
    }
    return hn;
  };

  Mat3 rr = Mat3::Zero();
  Mat3 tt = Mat3::Zero();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = 1.0 / batch.variance(i);
    const Vec3 hr = filtered_half(batch.jacobian.row(i).head<3>().transpose(), scale_r,
                                  cand_r.vectors);
    const Vec3 ht = filtered_half(batch.jacobian.row(i).tail<3>().transpose(), scale_t,
                                  cand_t.vectors);
    rr += w * hr * hr.transpose();
    tt += w * ht * ht.transpose();
  }
  if (rr.isZero(0.0) || tt.isZero(0.0)) {
    // Nothing survived the filter in at least one block.
    fill_block_eigen(rr, tt, rep);
    flag_all(rep);
    return rep;
  }
  fill_block_eigen(rr, tt, rep);
  flag_information(th, rep);
  return rep;
}

DegeneracyReport detect(const DetectorConfig& cfg, const InfoForm& lidar,
                        const LidarBatch* batch) {
  switch (cfg.method) {
    case DetectorMethod::CovSchur: return detect_cov_schur(lidar, cfg.thresholds);
    case DetectorMethod::BlockHessian: return detect_block_hessian(lidar, cfg.thresholds);
    case DetectorMethod::ConditionNumber: return detect_condition_number(lidar, cfg.kappa_max);
    case DetectorMethod::NormalizedHessian:
      if (batch == nullptr) {
        throw InvalidArgument("NormalizedHessian detector requires the raw lidar batch");
      }
      return detect_normalized_hessian(*batch, cfg.thresholds, cfg.contrib_floor);
  }
  throw InvalidArgument("invalid detector method");
}

Ellipsoid report_to_ellipsoid(const DegeneracyReport& rep, const Vec3& center,
                              double radius_cap) {
  Ellipsoid e;
  e.center = center;
  Vec3 var;
  Mat3 axes;
  if (rep.covariance_flavored()) {
    var = rep.trans_eigvals;
    axes = rep.trans_eigvecs;
  } else {
    // Smallest information is the largest variance: reverse the order.
    for (int i = 0; i < 3; ++i) {
      const double d = rep.trans_eigvals(2 - i);
      var(i) = d > 0.0 ? 1.0 / d : kInf;
      axes.col(i) = rep.trans_eigvecs.col(2 - i);
    }
  }
  for (int i = 0; i < 3; ++i) {
    const double v = std::isnan(var(i)) ? kInf : std::max(var(i), 0.0);
    e.radii(i) = std::min(std::sqrt(v), radius_cap);
  }
  e.axes = axes;
  return e;
}

std::string format_report_line(std::size_t frame, const DegeneracyReport& rep) {
  std::string s = fmt::format("{} {}", frame, to_string(rep.method));
  for (int i = 0; i < 3; ++i) s += fmt::format(" {:.17g}", rep.rot_eigvals(i));
  for (int i = 0; i < 3; ++i) s += fmt::format(" {:.17g}", rep.trans_eigvals(i));
  for (bool f : rep.slots()) s += f ? " 1" : " 0";
  s += rep.total ? " 1" : " 0";
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) s += fmt::format(" {:.17g}", rep.rot_eigvecs(r, c));
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) s += fmt::format(" {:.17g}", rep.trans_eigvecs(r, c));
  return s;
}

DegeneracyReport parse_report_line(std::string_view line, std::size_t* frame) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  if (tok.size() != 2 + 6 + 7 + 18) {
    throw InvalidArgument("malformed report line: expected 33 fields");
  }
  auto num = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok[i], &used);
      if (used != tok[i].size()) throw InvalidArgument("bad number");
      return v;
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed number in report line: " + tok[i]);
    }
  };
  auto flag = [&](std::size_t i) {
    if (tok[i] == "1") return true;
    if (tok[i] == "0") return false;
    throw InvalidArgument("malformed flag in report line: " + tok[i]);
  };
  DegeneracyReport rep;
  if (frame) *frame = static_cast<std::size_t>(std::stoull(tok[0]));
  rep.method = parse_detector(tok[1]);
  for (int i = 0; i < 3; ++i) rep.rot_eigvals(i) = num(2 + i);
  for (int i = 0; i < 3; ++i) rep.trans_eigvals(i) = num(5 + i);
  for (int i = 0; i < 3; ++i) rep.rot_flags[i] = flag(8 + i);
  for (int i = 0; i < 3; ++i) rep.trans_flags[i] = flag(11 + i);
  rep.total = flag(14);
  std::size_t k = 15;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) rep.rot_eigvecs(r, c) = num(k++);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) rep.trans_eigvecs(r, c) = num(k++);
  return rep;
}

}  // namespace skf
