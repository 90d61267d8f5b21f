#include <gtest/gtest.h>

#include <numbers>

#include "hklab/flat_models.hpp"
#include "hklab/random.hpp"

using namespace hklab;

namespace {

const cplx kRho = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

struct Row {
  const char* name;
  int num, den;
  std::optional<cplx> tau;
};

// the ALG model table, transcribed
const std::array<Row, 8> kTable{{{"Regular", 1, 1, std::nullopt},
                                 {"I0*", 1, 2, std::nullopt},
                                 {"II", 1, 6, kRho},
                                 {"II*", 5, 6, kRho},
                                 {"III", 1, 4, cplx(0, 1)},
                                 {"III*", 3, 4, cplx(0, 1)},
                                 {"IV", 1, 3, kRho},
                                 {"IV*", 2, 3, kRho}}};

// brute-force shortest nonzero vector norm over |n_i| <= 10
double brute_shortest(const Mat3& rows) {
  double best = 1e300;
  for (int a = -10; a <= 10; ++a)
    for (int b = -10; b <= 10; ++b)
      for (int c = -10; c <= 10; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        best = std::min(best, (a * rows.row(0) + b * rows.row(1) + c * rows.row(2)).norm());
      }
  return best;
}

Mat3 random_basis(Philox& rng) {
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) a(i, k) = (i == k) + rng.uniform(-0.4, 0.4);
  if (a.determinant() < 0) a.row(0) *= -1.0;
  return a;
}

}  // namespace

TEST(FlatModels, TableMatchesEntryForEntry) {
  for (const Row& row : kTable) {
    const FiberType t = parse_fiber_type(row.name);
    EXPECT_EQ(to_string(t), row.name);
    const AlgParameters p = alg_parameters(t);
    EXPECT_EQ(p.beta.num, row.num) << row.name;
    EXPECT_EQ(p.beta.den, row.den) << row.name;
    ASSERT_EQ(p.tau.has_value(), row.tau.has_value()) << row.name;
    if (row.tau) {
      EXPECT_LE(std::abs(*p.tau - *row.tau), 0.0) << row.name;
    }
  }
  EXPECT_THROW(parse_fiber_type("I1*"), Error);
}

TEST(FlatModels, SpecificRows) {
  const auto ii = alg_parameters(FiberType::II);
  EXPECT_EQ(ii.beta, (Rational{1, 6}));
  EXPECT_NEAR(std::abs(*ii.tau - std::exp(cplx(0, 2.0 * std::numbers::pi / 3.0))), 0.0, 1e-15);
  const auto iiis = alg_parameters(FiberType::IIIs);
  EXPECT_EQ(iiis.beta, (Rational{3, 4}));
  EXPECT_EQ(*iiis.tau, cplx(0, 1));
  EXPECT_FALSE(alg_parameters(FiberType::I0s).tau.has_value());
}

TEST(FlatModels, ModelFormsAreTheComplexFormulas) {
  // omega^1 = (i/2)(du^du* + dv^dv*) and omega^+ = du^dv with du = e0 + i e1, dv = e2 + i e3
  const ALGModel m = make_alg_model(FiberType::IV);
  const FormTriple t = alg_model_forms(m, std::polar(2.0, 0.3), {0.1, 0.2});
  TwoForm w1 = TwoForm::Zero(), re = TwoForm::Zero(), im = TwoForm::Zero();
  // du^du* = -2i e01, so (i/2) du^du* = e01; same for v
  w1[pair_index(0, 1)] = 1.0;
  w1[pair_index(2, 3)] = 1.0;
  // du^dv = e02 + i e03 + i e12 - e13
  re[pair_index(0, 2)] = 1.0;
  re[pair_index(1, 3)] = -1.0;
  im[pair_index(0, 3)] = 1.0;
  im[pair_index(1, 2)] = 1.0;
  EXPECT_EQ(t.omega[0], w1);
  EXPECT_EQ(t.omega[1], re);
  EXPECT_EQ(t.omega[2], im);
  EXPECT_LE((gram(t) - Mat3::Identity()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FlatModels, DeckInvarianceAllTypes) {
  Philox rng(201);
  for (FiberType ft : kFiberTypes) {
    const ALGModel m = make_alg_model(ft, 1.3, 2.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const cplx u = std::polar(m.R * (1.0 + 3.0 * rng.uniform()), sector_angle(m) * rng.uniform());
      const cplx v(rng.uniform(-1, 1), rng.uniform(-1, 1));
      worst = std::max(worst, deck_invariance_residual(m, u, v));
    }
    EXPECT_LE(worst, 1e-12) << to_string(ft);
  }
}

TEST(FlatModels, DeckMapActsOnCoordinates) {
  const ALGModel m = make_alg_model(FiberType::III);
  const cplx u{1.5, 0.2}, v{0.3, -0.4};
  const Vec4 x = deck_map(m) * Vec4(u.real(), u.imag(), v.real(), v.imag());
  const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * 0.25);
  EXPECT_NEAR(std::abs(cplx(x[0], x[1]) - e * u), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(cplx(x[2], x[3]) - std::conj(e) * v), 0.0, 1e-15);
  // reduction brings it back into the sector
  const auto [ru, rv] = reduce_to_sector(m, cplx(x[0], x[1]), cplx(x[2], x[3]));
  EXPECT_NEAR(std::abs(ru - u), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(rv - v), 0.0, 1e-14);
}

TEST(FlatModels, FiberTranslation) {
  const ALGModel m = make_alg_model(FiberType::II, 2.0);
  EXPECT_NEAR(std::abs(fiber_translate(m, 0.0, 1, 1) - 2.0 * (1.0 + kRho)), 0.0, 1e-15);
}

TEST(FlatModels, ChartErrors) {
  const ALGModel m = make_alg_model(FiberType::II, 1.0, 2.0);
  try {
    alg_model_forms(m, {1.0, 0.0}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfChart);
  }
  EXPECT_THROW(alg_model_forms(m, std::polar(3.0, 2.0), 0.0), Error);  // arg beyond pi/3
  ALGModel bad = m;
  bad.tau = {0.0, 1.0};
  try {
    validate(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentModel);
  }
  ALGModel free = make_alg_model(FiberType::I0s, 1.0, 1.0, {0.3, 2.0});
  EXPECT_NO_THROW(validate(free));
  free.tau = {0.3, -1.0};
  EXPECT_THROW(validate(free), Error);
}

TEST(FlatModels, DualLattice) {
  EXPECT_LE((dual_lattice(Lattice3()).basis() - Mat3::Identity()).cwiseAbs().maxCoeff(), 0.0);
  const Lattice3 d = dual_lattice(Lattice3(Eigen::Vector3d(2, 1, 1).asDiagonal()));
  EXPECT_LE((d.basis() - Mat3(Eigen::Vector3d(0.5, 1, 1).asDiagonal())).cwiseAbs().maxCoeff(), 0.0);

  Philox rng(202);
  for (int t = 0; t < 20; ++t) {
    // random unimodular integer matrix as a product of elementary moves
    Eigen::Matrix3i u = Eigen::Matrix3i::Identity();
    for (int s = 0; s < 6; ++s) {
      const int i = rng.uniform_int(0, 2), j = (i + 1 + rng.uniform_int(0, 1)) % 3;
      u.row(i) += rng.uniform_int(-2, 2) * u.row(j);
    }
    const Mat3 a = u.cast<double>() * random_basis(rng);
    const Mat3 pair = a * dual_lattice(Lattice3(a)).basis().transpose();
    EXPECT_LE((pair - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    const Mat3 dd = dual_lattice(dual_lattice(Lattice3(a))).basis();
    EXPECT_LE((dd - a).cwiseAbs().maxCoeff(), 1e-10);
  }
  try {
    Lattice3 s(Mat3::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularLattice);
  }
}

TEST(FlatModels, Lambda1) {
  EXPECT_NEAR(lambda1(Lattice3()), 2.0 * std::numbers::pi, 1e-14);
  const Mat3 d2 = Eigen::Vector3d(2, 1, 1).asDiagonal();
  EXPECT_NEAR(lambda1(Lattice3(d2)), std::numbers::pi, 1e-14);
  EXPECT_NEAR(lambda1(Lattice3(d2)), 2.0 * std::numbers::pi * brute_shortest(d2.inverse().transpose()), 1e-14);

  Philox rng(203);
  for (int t = 0; t < 30; ++t) {
    const Mat3 a = random_basis(rng);
    const double l = lambda1(Lattice3(a));
    EXPECT_NEAR(l, 2.0 * std::numbers::pi * brute_shortest(a.inverse().transpose()), 1e-12);
    const double s = 0.5 + 2.0 * rng.uniform();
    EXPECT_NEAR(lambda1(Lattice3(s * a)), l / s, 1e-12);
  }
}

TEST(FlatModels, AlhModelMetric) {
  Philox rng(204);
  const Mat3 a = random_basis(rng);
  const ALHModel m{Lattice3(a), 1.0};
  EXPECT_LE((gram(alh_model_triple(m)) - Mat3::Identity()).cwiseAbs().maxCoeff(), 0.0);
  const FormTriple t = alh_model_triple_lattice_coords(m);
  const MetricQuaternion mq = metric_from_triple(t);
  // dr^2 + |d theta|^2 with theta = A^T x
  Mat4 expected = Mat4::Zero();
  expected(0, 0) = 1.0;
  expected.block<3, 3>(1, 1) = a * a.transpose();
  EXPECT_LE((mq.g - expected).cwiseAbs().maxCoeff(), 1e-10);

  const Mat3 r = Eigen::AngleAxisd(1.1, Vec3(0.2, -1, 0.5).normalized()).toRotationMatrix();
  const MetricQuaternion rot = metric_from_triple(hyperkahler_rotate(t, r));
  EXPECT_LE((rot.g - mq.g).cwiseAbs().maxCoeff(), 1e-10);
}
