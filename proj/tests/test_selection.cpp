#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <random>

#include "skf/selection.hpp"

using namespace skf;

namespace {

Mat6 random_spd(std::mt19937_64& rng, double ridge = 0.1) {
  std::normal_distribution<double> n;
  Mat6 a;
  for (int i = 0; i < 36; ++i) a(i) = n(rng);
  return a * a.transpose() + ridge * Mat6::Identity();
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(std::uniform_real_distribution<double>(0, 3)(rng), axis)
      .toRotationMatrix();
}

InfoForm random_info(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  InfoForm f;
  f.info = SymMatrix6::symmetrized(random_spd(rng));
  for (int i = 0; i < 6; ++i) f.vec(i) = n(rng);
  return f;
}

DegeneracyReport random_report(std::mt19937_64& rng) {
  DegeneracyReport rep;
  rep.rot_eigvecs = random_rotation(rng);
  rep.trans_eigvecs = random_rotation(rng);
  std::bernoulli_distribution coin(0.4);
  for (int i = 0; i < 3; ++i) {
    rep.rot_flags[i] = coin(rng);
    rep.trans_flags[i] = coin(rng);
  }
  return rep;
}

}  // namespace

TEST(Basis, IdentityEigvecsGiveIdentity) {
  EXPECT_EQ(build_basis(DegeneracyReport{}).V, Mat6::Identity());
}

TEST(Basis, BlockPlacement) {
  DegeneracyReport rep;
  rep.trans_eigvecs = Eigen::AngleAxisd(3.14159265358979323846 / 2, Vec3::UnitZ()).toRotationMatrix();
  const Mat6 v = build_basis(rep).V;
  EXPECT_EQ(Mat3(v.topLeftCorner<3, 3>()), Mat3::Identity());
  EXPECT_EQ(Mat3(v.bottomRightCorner<3, 3>()), rep.trans_eigvecs);
  EXPECT_TRUE((v.topRightCorner<3, 3>().isZero(0.0)));
  EXPECT_TRUE((v.bottomLeftCorner<3, 3>().isZero(0.0)));
}

TEST(Basis, RandomReportIsOrthonormal) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 100; ++i) {
    const Mat6 v = build_basis(random_report(rng)).V;
    EXPECT_LT((v.transpose() * v - Mat6::Identity()).norm(), 1e-12);
  }
}

TEST(Selection, SlotOrdering) {
  DegeneracyReport rep;
  rep.rot_flags = {false, true, false};
  rep.trans_flags = {false, false, true};
  const SelectionMatrix s = build_selection(rep);
  EXPECT_EQ(s.matrix().diagonal(), (Vec6() << 0, 1, 0, 0, 0, 1).finished());
  EXPECT_EQ(s.rank(), 2);
  const Mat6 sm = s.matrix();
  EXPECT_EQ(Mat6(sm * sm), sm);

  EXPECT_EQ(build_selection(DegeneracyReport{}).matrix(), Mat6::Zero());
  rep.rot_flags = {true, true, true};
  rep.trans_flags = {true, true, true};
  EXPECT_EQ(build_selection(rep).matrix(), Mat6::Identity());
}

TEST(SelectVisual, FullSelectionIsIdentity) {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 100; ++i) {
    const InfoForm f = random_info(rng);
    DegeneracyReport rep = random_report(rng);
    rep.rot_flags = rep.trans_flags = {true, true, true};
    const auto sel = select_visual(f, build_basis(rep), build_selection(rep));
    EXPECT_LT((sel.system.info.matrix() - f.info.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((sel.system.vec - f.vec).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_FALSE(sel.regularized);
  }
}

TEST(SelectVisual, EmptySelectionIsZero) {
  std::mt19937_64 rng(53);
  DegeneracyReport rep = random_report(rng);
  rep.rot_flags = rep.trans_flags = {false, false, false};
  const auto sel = select_visual(random_info(rng), build_basis(rep), build_selection(rep));
  EXPECT_TRUE(sel.system.info.matrix().isZero(0.0));
  EXPECT_TRUE(sel.system.vec.isZero(0.0));
}

TEST(SelectVisual, AxisAlignedSingleSlot) {
  InfoForm f;
  f.info = SymMatrix6{Mat6((Vec6() << 1, 2, 3, 4, 5, 6).finished().asDiagonal())};
  f.vec = (Vec6() << 1, 1, 1, 1, 1, 7).finished();
  SelectionMatrix s;
  s.diag[5] = true;
  const auto sel = select_visual(f, BasisV{}, s);
  Mat6 want = Mat6::Zero();
  want(5, 5) = 6.0;
  EXPECT_LT((sel.system.info.matrix() - want).norm(), 1e-15);
  EXPECT_LT((sel.system.vec - (Vec6() << 0, 0, 0, 0, 0, 7).finished()).norm(), 1e-14);
}

TEST(SelectVisual, ProjectorSpectrumAndRankProperties) {
  std::mt19937_64 rng(54);
  for (int i = 0; i < 500; ++i) {
    const InfoForm f = random_info(rng);
    const DegeneracyReport rep = random_report(rng);
    const BasisV v = build_basis(rep);
    const SelectionMatrix s = build_selection(rep);
    const Mat6 w = projector(v, s);
    EXPECT_LT((w * w - w).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((w - w.transpose()).cwiseAbs().maxCoeff(), 1e-9);

    const auto sel = select_visual(f, v, s);
    const auto e = sym_eigen(sel.system.info);
    const double jmax = sym_eigen(f.info).values(0);
    EXPECT_GE(e.values.minCoeff(), -1e-9 * jmax);
    EXPECT_LE(e.values.maxCoeff(), jmax * (1 + 1e-12));
    int rank = 0;
    for (int k = 0; k < 6; ++k) rank += e.values(k) > 1e-9 * jmax;
    EXPECT_LE(rank, s.rank());
  }
}

TEST(SelectVisual, PreservesExactSolutions) {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    InfoForm f = random_info(rng);
    Vec6 x;
    for (int k = 0; k < 6; ++k) x(k) = n(rng);
    f.vec = f.info.matrix() * x;
    const DegeneracyReport rep = random_report(rng);
    const auto sel = select_visual(f, build_basis(rep), build_selection(rep));
    EXPECT_LT((sel.system.info.matrix() * x - sel.system.vec).norm(), 1e-8);
  }
}

TEST(SelectVisual, SingularInformationIsRegularized) {
  InfoForm f;
  Mat6 j = Mat6::Zero();
  j(3, 3) = 4.0;
  f.info = SymMatrix6{j};
  f.vec(3) = 2.0;
  SelectionMatrix s;
  s.diag[3] = true;
  const auto sel = select_visual(f, BasisV{}, s);
  EXPECT_TRUE(sel.regularized);
  EXPECT_NEAR(sel.system.info.matrix()(3, 3), 4.0, 1e-15);
  EXPECT_NEAR(sel.system.vec(3), 2.0, 1e-8);

  const auto none = select_visual(InfoForm::zero(), BasisV{}, s);
  EXPECT_TRUE(none.regularized);
  EXPECT_TRUE(none.system.info.matrix().isZero(0.0));
  EXPECT_TRUE(none.system.vec.isZero(0.0));
}
