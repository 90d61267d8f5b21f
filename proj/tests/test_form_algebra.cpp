#include <gtest/gtest.h>

#include "hklab/form_algebra.hpp"
#include "hklab/random.hpp"

using namespace hklab;

namespace {

TwoForm random_form(Philox& rng) {
  TwoForm w;
  for (int k = 0; k < 6; ++k) w[k] = rng.uniform(-1.0, 1.0);
  return w;
}

// (1/4) eps_abcd W_ab H_cd on the full antisymmetric matrices
double wedge_by_tensor(const TwoForm& a, const TwoForm& b) {
  const Mat4 wa = to_matrix(a), wb = to_matrix(b);
  double s = 0.0;
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      for (int r = 0; r < 4; ++r)
        for (int t = 0; t < 4; ++t) s += levi_civita4(p, q, r, t) * wa(p, q) * wb(r, t);
  return s / 4.0;
}

Mat4 random_pullback(Philox& rng) {
  Mat4 l;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) l(i, k) = (i == k) + rng.uniform(-0.6, 0.6);
  if (l.determinant() < 0.0) l.row(1) *= -1.0;
  return l;
}

}  // namespace

TEST(FormAlgebra, WedgeMatchesTensorContraction) {
  Philox rng(101);
  for (int t = 0; t < 50; ++t) {
    const TwoForm a = random_form(rng), b = random_form(rng);
    EXPECT_NEAR(wedge(a, b), wedge_by_tensor(a, b), 1e-14);
    EXPECT_NEAR(wedge(a, b), wedge(b, a), 1e-15);
    EXPECT_NEAR(wedge(a, b), a.dot(wedge_pairing() * b), 1e-14);
  }
}

TEST(FormAlgebra, BasisWedges) {
  EXPECT_EQ(wedge(basis_form(0, 1), basis_form(2, 3)), 1.0);
  EXPECT_EQ(wedge(basis_form(0, 2), basis_form(1, 3)), -1.0);
  EXPECT_EQ(wedge(basis_form(0, 3), basis_form(1, 2)), 1.0);
  EXPECT_EQ(wedge(basis_form(0, 1), basis_form(0, 2)), 0.0);
  EXPECT_EQ(basis_form(3, 1), -basis_form(1, 3));
}

TEST(FormAlgebra, EuclideanStarIsInnerProduct) {
  Philox rng(102);
  const Mat6& s = euclidean_star();
  EXPECT_LE((s * s - Mat6::Identity()).cwiseAbs().maxCoeff(), 0.0);
  for (int t = 0; t < 20; ++t) {
    const TwoForm a = random_form(rng), b = random_form(rng);
    EXPECT_NEAR(wedge(a, s * b), a.dot(b), 1e-14);
  }
}

TEST(FormAlgebra, FlatTripleIsAdmissibleAndSelfDual) {
  const FormTriple t = flat_triple();
  EXPECT_LE((gram(t) - Mat3::Identity()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(is_admissible(t));
  for (const auto& w : t.omega) EXPECT_LE((euclidean_star() * w - w).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((star_from_triple(t) - euclidean_star()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FormAlgebra, MatrixRoundTrip) {
  Philox rng(103);
  const TwoForm w = random_form(rng);
  const Mat4 m = to_matrix(w);
  EXPECT_LE((m + m.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((from_matrix(m) - w).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FormAlgebra, PullbackMatchesDefinition) {
  Philox rng(104);
  const TwoForm w = random_form(rng);
  const Mat4 l = random_pullback(rng);
  const TwoForm p = pullback(w, l);
  const Mat4 wm = to_matrix(w);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      // (L^* w)(e_a, e_b) = w(L e_a, L e_b)
      const double direct = l.col(a).dot(wm * l.col(b));
      EXPECT_NEAR(to_matrix(p)(a, b), direct, 1e-14);
    }
  EXPECT_LE((pullback_matrix(l) * w - p).cwiseAbs().maxCoeff(), 1e-14);
  // wedge scales by det L
  const TwoForm v = random_form(rng);
  EXPECT_NEAR(wedge(pullback(w, l), pullback(v, l)), l.determinant() * wedge(w, v), 1e-13);
}

TEST(FormAlgebra, FlatMetricIsIdentity) {
  const MetricQuaternion mq = metric_from_triple(flat_triple());
  EXPECT_LE((mq.g - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(mq.orientation, Orientation::Positive);
  EXPECT_LE((mq.I() * mq.Jm() - mq.K()).norm(), 1e-14);
}

TEST(FormAlgebra, PulledBackTripleRecoversLtL) {
  Philox rng(105);
  for (int t = 0; t < 100; ++t) {
    const Mat4 l = random_pullback(rng);
    const FormTriple tr = pullback(flat_triple(), l);
    EXPECT_TRUE(is_admissible(tr, 1e-12));
    const MetricQuaternion mq = metric_from_triple(tr);
    const Mat4 g = l.transpose() * l;
    EXPECT_LE((mq.g - g).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(std::sqrt(mq.g.determinant()), tr.volume, 1e-10);
    for (int i = 0; i < 3; ++i) {
      // complex structures square to -1 and are g-orthogonal
      EXPECT_LE((mq.J[i] * mq.J[i] + Mat4::Identity()).norm(), 1e-10);
      EXPECT_LE((mq.J[i].transpose() * mq.g * mq.J[i] - mq.g).norm(), 1e-9);
      // omega^i(X, Y) = g(J_i X, Y)
      EXPECT_LE((to_matrix(tr.omega[i]) - mq.J[i].transpose() * mq.g).norm(), 1e-9);
    }
    EXPECT_LE((mq.I() * mq.Jm() - mq.K()).norm(), 1e-10);
    EXPECT_EQ(mq.orientation, Orientation::Positive);
  }
}

TEST(FormAlgebra, StarFromTripleMatchesPulledBackMetric) {
  Philox rng(106);
  const Mat4 l = random_pullback(rng);
  const FormTriple tr = pullback(flat_triple(), l);
  // pulled back star: *_g (L^* w) = L^* (*w) for orientation-preserving L
  const Mat6 p = pullback_matrix(l);
  const Mat6 expected = p * euclidean_star() * p.inverse();
  EXPECT_LE((star_from_triple(tr) - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FormAlgebra, NegatedTripleIsNegativelyOriented) {
  FormTriple t = flat_triple();
  for (auto& w : t.omega) w = -w;
  EXPECT_EQ(metric_from_triple(t).orientation, Orientation::Negative);
}

TEST(FormAlgebra, ScaledGramIsRenormalized) {
  FormTriple t = flat_triple();
  for (auto& w : t.omega) w *= 2.0;  // gram = 4 Id
  const MetricQuaternion mq = metric_from_triple(t);
  EXPECT_NEAR(mq.volume, 4.0, 1e-14);
  EXPECT_LE((mq.g - 2.0 * Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(FormAlgebra, Errors) {
  FormTriple zero;
  EXPECT_THROW(metric_from_triple(zero), Error);
  try {
    star_from_triple(zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTriple);
  }
  FormTriple skew = flat_triple();
  skew.omega[0] *= 3.0;
  try {
    metric_from_triple(skew);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncompatibleTriple);
  }
  Mat3 not_rot = Mat3::Identity();
  not_rot(0, 0) = -1.0;
  try {
    hyperkahler_rotate(flat_triple(), not_rot);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSO3);
  }
}

TEST(FormAlgebra, RotationPreservesAdmissibility) {
  const Mat3 r = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const FormTriple t = hyperkahler_rotate(flat_triple(), r);
  EXPECT_TRUE(is_admissible(t, 1e-14));
  const MetricQuaternion mq = metric_from_triple(t);
  EXPECT_LE((mq.g - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-13);
}
