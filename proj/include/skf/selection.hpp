#pragma once

#include <array>

#include "skf/degeneracy.hpp"
#include "skf/measurements.hpp"

namespace skf {

/// Block-diagonal rotation blockdiag(V_r, V_t) into the LiDAR eigen-basis.
struct BasisV {
  Mat6 V = Mat6::Identity();
};

/// Binary diagonal selection over eigen-slots: rotation 0..2 then translation
/// 3..5, each block in descending-eigenvalue order of the report.
struct SelectionMatrix {
  std::array<bool, 6> diag{};

  Mat6 matrix() const;
  int rank() const;
};

struct SelectedVisual {
  InfoForm system;           // (J'_I, b')
  bool regularized = false;  // visual information had to be regularized
};

BasisV build_basis(const DegeneracyReport& rep);
SelectionMatrix build_selection(const DegeneracyReport& rep);

/// W = V S V^T (an orthogonal projector).
Mat6 projector(const BasisV& v, const SelectionMatrix& s);

/// J'_I = W J_I W and b' = W J_I W J_I^{-1} b. A singular J_I is replaced by
/// J_I + 1e-9 * tr(J_I)/6 * I and the outcome is marked regularized.
SelectedVisual select_visual(const InfoForm& visual, const BasisV& v, const SelectionMatrix& s);

}  // namespace skf
