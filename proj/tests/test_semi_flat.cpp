#include <gtest/gtest.h>

#include "hklab/random.hpp"
#include "hklab/semi_flat.hpp"

using namespace hklab;

namespace {

PeriodData varying() {
  PeriodData pd;
  pd.tau1.terms = {{0, {1.0, 0.0}}, {2, {0.05, 0.02}}};
  pd.tau2.terms = {{0, {0.1, 1.0}}, {1, {0.1, 0.0}}, {-1, {0.02, -0.01}}};
  pd.g.terms = {{1, {1.0, 0.2}}, {-1, {0.5, 0.0}}};
  pd.a = 1.7;
  return pd;
}

// holomorphic derivative by a central difference, independent of the termwise rule
cplx numeric_derivative(const LaurentSeries& f, cplx z) {
  const double h = 1e-5;
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

double wedge_by_tensor(const TwoForm& a, const TwoForm& b) {
  const Mat4 wa = to_matrix(a), wb = to_matrix(b);
  double s = 0.0;
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q)
      for (int r = 0; r < 4; ++r)
        for (int t = 0; t < 4; ++t) s += levi_civita4(p, q, r, t) * wa(p, q) * wb(r, t);
  return s / 4.0;
}

cplx random_z(Philox& rng) { return cplx(1.0 + rng.uniform(-0.3, 0.3), 0.5 + rng.uniform(-0.3, 0.3)); }

}  // namespace

TEST(SemiFlat, ConstantDataHandEvaluation) {
  // i dz^dz* + (i/2) dv^dv* with dz^dz* = -2i e01, dv^dv* = -2i e23
  const SemiFlatForms f = omega_sf(PeriodData{}, {1.0, 0.3}, {0.2, 0.1});
  TwoForm expected = TwoForm::Zero();
  expected[pair_index(0, 1)] = 2.0;
  expected[pair_index(2, 3)] = 1.0;
  EXPECT_LE((f.omega_sf - expected).cwiseAbs().maxCoeff(), 1e-15);
  // dz^dv = e02 + i e03 + i e12 - e13
  TwoForm re = TwoForm::Zero(), im = TwoForm::Zero();
  re[pair_index(0, 2)] = 1.0;
  re[pair_index(1, 3)] = -1.0;
  im[pair_index(0, 3)] = 1.0;
  im[pair_index(1, 2)] = 1.0;
  EXPECT_LE((f.omega_plus_re - re).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((f.omega_plus_im - im).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SemiFlat, GammaBasics) {
  Philox rng(301);
  const PeriodData c;
  const PeriodData pd = varying();
  for (int t = 0; t < 20; ++t) {
    const cplx z = random_z(rng), v(rng.uniform(-2, 2), rng.uniform(-2, 2));
    EXPECT_EQ(gamma(c, z, v), cplx(0.0));
    EXPECT_EQ(gamma(pd, z, 0.0), cplx(0.0));
    // R-linear
    const cplx v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double al = rng.uniform(-3, 3), be = rng.uniform(-3, 3);
    EXPECT_LE(std::abs(gamma(pd, z, al * v + be * v2) - al * gamma(pd, z, v) - be * gamma(pd, z, v2)), 1e-12);
  }
  // not C-linear once the periods vary
  const cplx z{1.0, 0.5};
  EXPECT_GT(std::abs(gamma(pd, z, cplx(0, 1)) - cplx(0, 1) * gamma(pd, z, 1.0)), 1e-3);
}

TEST(SemiFlat, GammaShiftIdentity) {
  Philox rng(302);
  const PeriodData pd = varying();
  for (int t = 0; t < 50; ++t) {
    const cplx z = random_z(rng), v(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const int m = rng.uniform_int(-3, 3), n = rng.uniform_int(-3, 3);
    const cplx lhs = gamma(pd, z, v + double(m) * pd.tau1(z) + double(n) * pd.tau2(z)) - gamma(pd, z, v);
    const cplx rhs = double(m) * numeric_derivative(pd.tau1, z) + double(n) * numeric_derivative(pd.tau2, z);
    EXPECT_LE(std::abs(lhs - rhs), 1e-8);
  }
}

TEST(SemiFlat, FiberArea) {
  EXPECT_NEAR(fiber_area(PeriodData{}, {1.0, 0.5}, 128), 1.0, 1e-6);
  const PeriodData pd = varying();
  for (cplx z : {cplx(1.0, 0.5), cplx(1.2, 0.2), cplx(0.8, 0.7)})
    EXPECT_NEAR(fiber_area(pd, z, 128), pd.a, 1e-6);
}

TEST(SemiFlat, LatticeInvariance) {
  Philox rng(303);
  const PeriodData c;
  const PeriodData pd = varying();
  double worst_const = 0.0, worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const cplx z = random_z(rng), v(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const int m = rng.uniform_int(-3, 3), n = rng.uniform_int(-3, 3);
    const SemiFlatForms a = omega_sf(c, z, v), b = omega_sf(c, z, v + double(m) * c.tau1(z) + double(n) * c.tau2(z));
    worst_const = std::max(worst_const, (a.omega_sf - b.omega_sf).cwiseAbs().maxCoeff());
    worst = std::max(worst, lattice_shift_residual(pd, z, v, m, n));
  }
  EXPECT_LE(worst_const, 1e-14);
  EXPECT_LE(worst, 1e-10);
}

TEST(SemiFlat, TripleIsAdmissible) {
  Philox rng(304);
  const PeriodData pd = varying();
  for (int t = 0; t < 50; ++t) {
    const SemiFlatForms f = omega_sf(pd, random_z(rng), cplx(rng.uniform(0, 1), rng.uniform(0, 1)));
    EXPECT_LE((gram(f.triple) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SemiFlat, MongeAmpereConstantFromConstantData) {
  // brute force: omega_sf^2 against omega+ ^ conj(omega+) = Re^Re + Im^Im
  const SemiFlatForms f = omega_sf(PeriodData{}, {0.7, 0.4}, {0.3, 0.9});
  const double lhs = wedge_by_tensor(f.omega_sf, f.omega_sf);
  const double rhs = wedge_by_tensor(f.omega_plus_re, f.omega_plus_re) + wedge_by_tensor(f.omega_plus_im, f.omega_plus_im);
  EXPECT_NEAR(lhs / rhs, kMongeAmpereRatio, 1e-15);
}

TEST(SemiFlat, MongeAmpereRatioIsConstant) {
  Philox rng(305);
  PeriodData pd = varying();
  std::vector<std::pair<cplx, cplx>> pts;
  for (int t = 0; t < 100; ++t) pts.emplace_back(random_z(rng), cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)));
  const MaRatioResult r = check_ma_ratio(pd, pts, 1e-9);
  EXPECT_NEAR(r.ratio, kMongeAmpereRatio, 1e-9);
  EXPECT_LE(r.max_deviation, 1e-9);
  pd.a *= 2.0;
  EXPECT_NEAR(check_ma_ratio(pd, pts).ratio, r.ratio, 1e-12);
}

TEST(SemiFlat, ClosedForConstantData) { EXPECT_LE(check_closed(PeriodData{}, ClosedGrid{}), 1e-12); }

TEST(SemiFlat, ClosednessSecondOrder) {
  auto ratio = [](const PeriodData& pd) {
    ClosedGrid g1, g2;
    g1.h = 1e-2;
    g2.h = 5e-3;
    return check_closed(pd, g1) / check_closed(pd, g2);
  };
  PeriodData tau2;
  tau2.tau2.terms = {{0, {0.0, 1.0}}, {1, {0.1, 0.0}}};
  EXPECT_NEAR(ratio(tau2), 4.0, 0.8);
  PeriodData cubic;
  cubic.g.terms = {{3, {1.0, 0.0}}};
  EXPECT_NEAR(ratio(cubic), 4.0, 0.8);
  PeriodData full = varying();
  full.sigma.terms = {{2, {0.3, 0.1}}};
  EXPECT_NEAR(ratio(full), 4.0, 0.8);
}

TEST(SemiFlat, LinearTwistIsExactForCentralDifferences) {
  // coefficients at most quadratic in the coordinates: central differences are exact
  PeriodData lin;
  lin.g.terms = {{1, {1.0, 0.0}}};
  EXPECT_LE(check_closed(lin, ClosedGrid{}), 1e-12);
}

TEST(SemiFlat, DegeneratePeriods) {
  PeriodData pd;
  pd.tau2 = pd.tau1;
  try {
    omega_sf(pd, {1.0, 0.0}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePeriods);
  }
  EXPECT_THROW(gamma(pd, {1.0, 0.0}, 1.0), Error);
}

TEST(SemiFlat, LaurentDerivativeTermwise) {
  const PeriodData pd = varying();
  const cplx z{1.1, -0.3};
  EXPECT_LE(std::abs(pd.tau2.derivative()(z) - numeric_derivative(pd.tau2, z)), 1e-9);
  EXPECT_THROW(pd.tau2(0.0), Error);
}
