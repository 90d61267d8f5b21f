#pragma once

// Semi-flat metric on an elliptic fibration chart (z, v), v in C/(Z tau1 + Z tau2).
// Real coordinates (Re z, Im z, Re v, Im v), complex 1-forms dz = e0 + i e1,
// dv = e2 + i e3.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/flat_models.hpp"
#include "hklab/form_algebra.hpp"

namespace hklab {

// Monge-Ampere constant c with omega_sf^2 = c omega+ ^ conj(omega+) in this
// realification, fixed by the constant-data oracle in the tests.
inline constexpr double kMongeAmpereRatio = 1.0;

struct LaurentSeries {
  std::vector<std::pair<int, cplx>> terms;  // (exponent, coefficient)

  static LaurentSeries constant(cplx c) { return LaurentSeries{{{0, c}}}; }

  cplx operator()(cplx z) const {
    cplx s = 0.0;
    for (const auto& [e, c] : terms) {
      if (e < 0 && z == cplx(0.0)) fail(ErrorCode::InvalidArgument, "Laurent series evaluated at z = 0");
      s += c * std::pow(z, e);
    }
    return s;
  }

  LaurentSeries derivative() const {
    LaurentSeries d;
    for (const auto& [e, c] : terms)
      if (e != 0) d.terms.emplace_back(e - 1, c * double(e));
    return d;
  }
};

struct PeriodData {
  LaurentSeries tau1 = LaurentSeries::constant(1.0);
  LaurentSeries tau2 = LaurentSeries::constant(cplx(0.0, 1.0));
  LaurentSeries g = LaurentSeries::constant(1.0);
  LaurentSeries sigma;  // zero section sigma'(z); empty = 0
  double a = 1.0;
};

inline constexpr double kDegeneratePeriodTol = 1e-12;

// Im(conj(tau1) tau2)
inline double period_area(const PeriodData& pd, cplx z) {
  const double d = std::imag(std::conj(pd.tau1(z)) * pd.tau2(z));
  if (!(d > kDegeneratePeriodTol)) fail(ErrorCode::DegeneratePeriods, "Im(conj(tau1) tau2) <= 0");
  return d;
}

// Gamma(z, w) with w the fiber coordinate relative to the section
inline cplx gamma(const PeriodData& pd, cplx z, cplx w) {
  const double d = period_area(pd, z);
  const cplx t1 = pd.tau1(z), t2 = pd.tau2(z);
  const cplx dt1 = pd.tau1.derivative()(z), dt2 = pd.tau2.derivative()(z);
  return (std::imag(std::conj(t1) * w) * dt2 - std::imag(std::conj(t2) * w) * dt1) / d;
}

using CForm1 = Eigen::Matrix<cplx, 4, 1>;

inline CForm1 dz_form() { return CForm1(1.0, cplx(0.0, 1.0), 0.0, 0.0); }
inline CForm1 dv_form() { return CForm1(0.0, 0.0, 1.0, cplx(0.0, 1.0)); }

inline Eigen::Matrix<cplx, 6, 1> wedge1(const CForm1& a, const CForm1& b) {
  Eigen::Matrix<cplx, 6, 1> w;
  for (int k = 0; k < 6; ++k) {
    const int i = kPairs[k][0], j = kPairs[k][1];
    w[k] = a[i] * b[j] - a[j] * b[i];
  }
  return w;
}

struct SemiFlatForms {
  TwoForm omega_sf;
  TwoForm omega_plus_re;  // Re(g dz ^ dv)
  TwoForm omega_plus_im;  // Im(g dz ^ dv)
  FormTriple triple;      // (omega_sf, sqrt(2c) Re omega+, sqrt(2c) Im omega+), V = omega_sf^2 / 2
};

// v is the chart coordinate; the fiber coordinate is w = v - sigma(z).
inline SemiFlatForms omega_sf(const PeriodData& pd, cplx z, cplx v) {
  if (!(pd.a > 0.0)) fail(ErrorCode::InvalidArgument, "fiber area a must be positive");
  const double d = period_area(pd, z);
  const cplx gz = pd.g(z);
  const cplx w = v - pd.sigma(z);
  const cplx gam = gamma(pd, z, w);
  const CForm1 dz = dz_form();
  const CForm1 dw = dv_form() - pd.sigma.derivative()(z) * dz;
  const CForm1 theta = dw - gam * dz;
  const cplx i{0.0, 1.0};
  const Eigen::Matrix<cplx, 6, 1> sf = i * std::norm(gz) * (d / pd.a) * wedge1(dz, dz.conjugate()) +
                                       (i / 2.0) * (pd.a / d) * wedge1(theta, theta.conjugate());
  const Eigen::Matrix<cplx, 6, 1> plus = gz * wedge1(dz, dv_form());

  SemiFlatForms out;
  out.omega_sf = sf.real();
  out.omega_plus_re = plus.real();
  out.omega_plus_im = plus.imag();
  const double s = std::sqrt(2.0 * kMongeAmpereRatio);
  out.triple.omega = {out.omega_sf, s * out.omega_plus_re, s * out.omega_plus_im};
  out.triple.volume = 0.5 * wedge(out.omega_sf, out.omega_sf);
  if (!(out.triple.volume > 0.0)) fail(ErrorCode::DegeneratePeriods, "semi-flat form is degenerate (g = 0?)");
  return out;
}

// omega_sf^2 / (omega+ ^ conj omega+) at one point
inline double ma_ratio_at(const PeriodData& pd, cplx z, cplx v) {
  const SemiFlatForms f = omega_sf(pd, z, v);
  const double plus = wedge(f.omega_plus_re, f.omega_plus_re) + wedge(f.omega_plus_im, f.omega_plus_im);
  return wedge(f.omega_sf, f.omega_sf) / plus;
}

struct MaRatioResult {
  double ratio = 0.0;
  double max_deviation = 0.0;
};

inline MaRatioResult check_ma_ratio(const PeriodData& pd, const std::vector<std::pair<cplx, cplx>>& points,
                                    double tol = 1e-9) {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "check_ma_ratio: no sample points");
  MaRatioResult r;
  double sum = 0.0;
  for (const auto& [z, v] : points) {
    const double q = ma_ratio_at(pd, z, v);
    sum += q;
    r.max_deviation = std::max(r.max_deviation, std::abs(q - kMongeAmpereRatio));
  }
  r.ratio = sum / double(points.size());
  if (r.max_deviation > tol)
    fail(ErrorCode::NonconstantRatio, "Monge-Ampere ratio deviates by " + std::to_string(r.max_deviation));
  return r;
}

// Midpoint rule on the fundamental parallelogram s tau1 + t tau2, n x n cells.
inline double fiber_area(const PeriodData& pd, cplx z, int n = 128) {
  const cplx t1 = pd.tau1(z), t2 = pd.tau2(z);
  const double jac = period_area(pd, z);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx v = (i + 0.5) / n * t1 + (j + 0.5) / n * t2;
      sum += omega_sf(pd, z, v).omega_sf[5];  // e23 = d(Re v) ^ d(Im v)
    }
  return sum * jac / (double(n) * n);
}

// Real Jacobian of (z, v) -> (z, v + m tau1(z) + n tau2(z)) in (Re z, Im z, Re v, Im v).
inline Mat4 lattice_shift_jacobian(const PeriodData& pd, cplx z, int m, int n) {
  const cplx c = double(m) * pd.tau1.derivative()(z) + double(n) * pd.tau2.derivative()(z);
  Mat4 l = Mat4::Identity();
  l(2, 0) = c.real(), l(2, 1) = -c.imag();
  l(3, 0) = c.imag(), l(3, 1) = c.real();
  return l;
}

// max |T^* omega(z, v) - omega(z, v)| over the three forms, T the lattice shift
inline double lattice_shift_residual(const PeriodData& pd, cplx z, cplx v, int m, int n) {
  const cplx shifted = v + double(m) * pd.tau1(z) + double(n) * pd.tau2(z);
  const SemiFlatForms f0 = omega_sf(pd, z, v);
  const SemiFlatForms f1 = omega_sf(pd, z, shifted);
  const Mat4 l = lattice_shift_jacobian(pd, z, m, n);
  double r = (pullback(f1.omega_sf, l) - f0.omega_sf).cwiseAbs().maxCoeff();
  r = std::max(r, (pullback(f1.omega_plus_re, l) - f0.omega_plus_re).cwiseAbs().maxCoeff());
  r = std::max(r, (pullback(f1.omega_plus_im, l) - f0.omega_plus_im).cwiseAbs().maxCoeff());
  return r;
}

// Sample points z0 + spacing (i0 + i i1), v0 + spacing (i2 + i i3), 0 <= ik < n;
// derivatives by central differences with step h.
struct ClosedGrid {
  cplx z0{1.0, 0.5};
  cplx v0{0.1, 0.2};
  double spacing = 0.1;
  int n = 3;
  double h = 1e-2;
};

inline std::array<TwoForm, 3> semi_flat_raw(const PeriodData& pd, const Vec4& x) {
  const SemiFlatForms f = omega_sf(pd, cplx(x[0], x[1]), cplx(x[2], x[3]));
  return {f.omega_sf, f.omega_plus_re, f.omega_plus_im};
}

// components (012), (013), (023), (123) of d of a 2-form from its partials
inline Eigen::Vector4d exterior_derivative(const std::array<TwoForm, 4>& partial) {
  static constexpr std::array<std::array<int, 3>, 4> triples{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  Eigen::Vector4d out;
  for (int t = 0; t < 4; ++t) {
    const int a = triples[t][0], b = triples[t][1], e = triples[t][2];
    out[t] = partial[a][pair_index(b, e)] - partial[b][pair_index(a, e)] + partial[e][pair_index(a, b)];
  }
  return out;
}

inline double check_closed(const PeriodData& pd, const ClosedGrid& grid) {
  double worst = 0.0;
  const int n = grid.n;
  for (int i0 = 0; i0 < n; ++i0)
    for (int i1 = 0; i1 < n; ++i1)
      for (int i2 = 0; i2 < n; ++i2)
        for (int i3 = 0; i3 < n; ++i3) {
          const Vec4 x(grid.z0.real() + grid.spacing * i0, grid.z0.imag() + grid.spacing * i1,
                       grid.v0.real() + grid.spacing * i2, grid.v0.imag() + grid.spacing * i3);
          std::array<std::array<TwoForm, 4>, 3> partial;
          for (int a = 0; a < 4; ++a) {
            Vec4 xp = x, xm = x;
            xp[a] += grid.h;
            xm[a] -= grid.h;
            const auto fp = semi_flat_raw(pd, xp);
            const auto fm = semi_flat_raw(pd, xm);
            for (int f = 0; f < 3; ++f) partial[f][a] = (fp[f] - fm[f]) / (2.0 * grid.h);
          }
          for (int f = 0; f < 3; ++f) worst = std::max(worst, exterior_derivative(partial[f]).cwiseAbs().maxCoeff());
        }
  return worst;
}

}  // namespace hklab
