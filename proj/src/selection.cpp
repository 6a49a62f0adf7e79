#include "skf/selection.hpp"

#include <Eigen/Cholesky>

namespace skf {

Mat6 SelectionMatrix::matrix() const {
  Mat6 s = Mat6::Zero();
  for (int i = 0; i < 6; ++i) s(i, i) = diag[i] ? 1.0 : 0.0;
  return s;
}

int SelectionMatrix::rank() const {
  int n = 0;
  for (bool b : diag) n += b;
  return n;
}

BasisV build_basis(const DegeneracyReport& rep) {
  BasisV b;
  b.V.setZero();
  b.V.block<3, 3>(kRot, kRot) = rep.rot_eigvecs;
  b.V.block<3, 3>(kTrans, kTrans) = rep.trans_eigvecs;
  return b;
}

SelectionMatrix build_selection(const DegeneracyReport& rep) { return {rep.slots()}; }

Mat6 projector(const BasisV& v, const SelectionMatrix& s) {
  return v.V * s.matrix() * v.V.transpose();
}

SelectedVisual select_visual(const InfoForm& visual, const BasisV& v, const SelectionMatrix& s) {
  SelectedVisual out;
  const Mat6 w = projector(v, s);
  const Mat6& j = visual.info.matrix();

  Mat6 j_inv;
  try {
    j_inv = invert_spd(visual.info).matrix();
  } catch (const NearSingular&) {
    out.regularized = true;
    const double tr = visual.info.trace();
    if (tr > 0.0) {
      const Mat6 reg = j + (1e-9 * tr / 6.0) * Mat6::Identity();
      j_inv = reg.ldlt().solve(Mat6::Identity());
    } else {
      // No visual information at all: the selected system is empty.
      j_inv.setZero();
    }
  }

  const Mat6 wjw = w * j * w;
  out.system.info = SymMatrix6::symmetrized(wjw);
  out.system.vec = wjw * (j_inv * visual.vec);
  return out;
}

}  // namespace skf
