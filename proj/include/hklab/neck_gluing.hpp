#pragma once

// Neck surgery on [rho-1, rho+1] x T^3, T^3 = R^3 / Lambda.
// Fields store omega^i - omega^i_flat in the 2-form basis order
// (dr^dth1, dr^dth2, dr^dth3, dth1^dth2, dth1^dth3, dth2^dth3), sampled on a
// uniform r grid (odd n_r, rho at the center) times an n_theta^3 Fourier grid.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/flat_models.hpp"
#include "hklab/form_algebra.hpp"
#include "hklab/spectral.hpp"

namespace hklab {

struct NeckGrid {
  Lattice3 lattice;
  double rho = 8.0;
  int n_r = 65;
  int n_theta = 8;

  double h() const { return 2.0 / (n_r - 1); }
  double r_at(int k) const { return rho - 1.0 + h() * k; }
  int center() const { return (n_r - 1) / 2; }
  std::size_t torus_size() const { return static_cast<std::size_t>(n_theta) * n_theta * n_theta; }
  std::size_t size() const { return torus_size() * n_r; }
  TorusGrid<3> torus() const { return TorusGrid<3>(n_theta, lattice.basis()); }
};

using NeckComponents = std::array<std::vector<double>, 6>;
using NeckOneForm = std::array<std::vector<double>, 3>;  // dth^j components

struct NeckField {
  NeckGrid grid;
  double delta = 0.01;
  std::array<NeckComponents, 3> pert;  // omega^i - omega^i_flat
};

inline NeckComponents zero_components(const NeckGrid& g) {
  NeckComponents c;
  for (auto& v : c) v.assign(g.size(), 0.0);
  return c;
}

inline NeckField flat_neck(const NeckGrid& g, double delta = 0.01) {
  NeckField nf{g, delta, {}};
  for (auto& c : nf.pert) c = zero_components(g);
  return nf;
}

inline void validate(const NeckField& nf) {
  const NeckGrid& g = nf.grid;
  if (g.n_r < 5 || g.n_r % 2 == 0) fail(ErrorCode::InvalidArgument, "n_r must be odd and >= 5");
  if (g.n_theta < 2) fail(ErrorCode::InvalidArgument, "n_theta must be >= 2");
  const double l1 = lambda1(g.lattice);
  if (!(nf.delta > 0.0 && nf.delta < l1 / 100.0))
    fail(ErrorCode::InvalidArgument, "delta must satisfy 0 < delta < lambda1/100");
  for (const auto& comps : nf.pert)
    for (const auto& v : comps)
      if (v.size() != g.size()) fail(ErrorCode::InvalidArgument, "neck field has wrong sample count");
}

// ---- cutoff ----

struct Cutoff {
  std::function<double(double)> chi;
  std::function<double(double)> dchi;
};

// chi = 1 on (-inf, -1/2], 0 on [1/2, inf); chi(t) = 1 - S(t + 1/2) with
// S(x) = f(x) / (f(x) + f(1-x)), f(x) = exp(-1/(2x)).
inline Cutoff smooth_cutoff() {
  auto f = [](double x) { return x > 0.0 ? std::exp(-0.5 / x) : 0.0; };
  auto df = [](double x) { return x > 0.0 ? std::exp(-0.5 / x) * 0.5 / (x * x) : 0.0; };
  Cutoff c;
  c.chi = [f](double t) {
    const double x = t + 0.5;
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return 1.0 - f(x) / (f(x) + f(1.0 - x));
  };
  c.dchi = [f, df](double t) {
    const double x = t + 0.5;
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double a = f(x), b = f(1.0 - x);
    const double s = a + b;
    // d/dx a/(a+b) with b' = -df(1-x)
    return -(df(x) * b + a * df(1.0 - x)) / (s * s);
  };
  return c;
}

struct GluingParams {
  double rho = 8.0;
  Vec3 Theta = Vec3::Zero();
  Cutoff cutoff = smooth_cutoff();
};

// ---- discrete calculus on the neck ----

// fourth-order finite differences in r for every torus slot
inline std::vector<double> radial_derivative(const NeckGrid& g, const std::vector<double>& f) {
  const std::size_t T = g.torus_size();
  const int n = g.n_r;
  const double h12 = 12.0 * g.h();
  std::vector<double> out(f.size());
  auto at = [&](int k, std::size_t s) { return f[static_cast<std::size_t>(k) * T + s]; };
  for (int k = 0; k < n; ++k)
    for (std::size_t s = 0; s < T; ++s) {
      double d;
      if (k >= 2 && k <= n - 3)
        d = at(k - 2, s) - 8 * at(k - 1, s) + 8 * at(k + 1, s) - at(k + 2, s);
      else if (k == 0)
        d = -25 * at(0, s) + 48 * at(1, s) - 36 * at(2, s) + 16 * at(3, s) - 3 * at(4, s);
      else if (k == 1)
        d = -3 * at(0, s) - 10 * at(1, s) + 18 * at(2, s) - 6 * at(3, s) + at(4, s);
      else if (k == n - 1)
        d = 25 * at(n - 1, s) - 48 * at(n - 2, s) + 36 * at(n - 3, s) - 16 * at(n - 4, s) + 3 * at(n - 5, s);
      else
        d = 3 * at(n - 1, s) + 10 * at(n - 2, s) - 18 * at(n - 3, s) + 6 * at(n - 4, s) - at(n - 5, s);
      out[static_cast<std::size_t>(k) * T + s] = d / h12;
    }
  return out;
}

// spectral d/dtheta^j (j = 0, 1, 2) of every r slice
inline NeckOneForm theta_gradient(const NeckGrid& g, const TorusGrid<3>& tg, const std::vector<double>& f) {
  const std::size_t T = g.torus_size();
  NeckOneForm out;
  for (auto& v : out) v.assign(f.size(), 0.0);
  for (int k = 0; k < g.n_r; ++k) {
    const std::vector<double> slice(f.begin() + k * T, f.begin() + (k + 1) * T);
    const Spectrum sp = tg.to_spectrum(slice);
    for (int j = 0; j < 3; ++j) {
      Spectrum dj(T);
      for (std::size_t s = 0; s < T; ++s) dj[s] = cplx(0.0, tg.kappa(j)[s]) * sp[s];
      const std::vector<double> v = tg.to_physical(dj);
      std::copy(v.begin(), v.end(), out[j].begin() + k * T);
    }
  }
  return out;
}

// cumulative trapezoid integral from the center slice
inline std::vector<double> radial_primitive(const NeckGrid& g, const std::vector<double>& f) {
  const std::size_t T = g.torus_size();
  const int kc = g.center();
  const double h = g.h();
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    for (int k = kc + 1; k < g.n_r; ++k)
      out[k * T + s] = out[(k - 1) * T + s] + 0.5 * h * (f[(k - 1) * T + s] + f[k * T + s]);
    for (int k = kc - 1; k >= 0; --k)
      out[k * T + s] = out[(k + 1) * T + s] - 0.5 * h * (f[(k + 1) * T + s] + f[k * T + s]);
  }
  return out;
}

struct Closedness {
  double spectral = 0.0;  // dth1^dth2^dth3 component
  double radial = 0.0;    // dr^dth^dth components
  double scale = 0.0;     // largest individual derivative term
  double magnitude = 0.0; // largest component value

  // relative to the derivative terms, or to the form itself when those are roundoff (constant forms)
  double reference() const { return std::max(scale, magnitude); }
  double relative_radial() const { return reference() > 0.0 ? radial / reference() : radial; }
  double relative_spectral() const { return reference() > 0.0 ? spectral / reference() : spectral; }
};

inline Closedness closedness(const NeckGrid& g, const NeckComponents& c) {
  const TorusGrid<3> tg = g.torus();
  std::array<NeckOneForm, 6> grad;
  for (int k = 0; k < 6; ++k) grad[k] = theta_gradient(g, tg, c[k]);
  std::array<std::vector<double>, 3> dr;
  for (int k = 0; k < 3; ++k) dr[k] = radial_derivative(g, c[3 + k]);
  Closedness out;
  for (const auto& comp : c)
    for (double v : comp) out.magnitude = std::max(out.magnitude, std::abs(v));
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double t0 = grad[5][0][p], t1 = grad[4][1][p], t2 = grad[3][2][p];
    out.spectral = std::max(out.spectral, std::abs(t0 - t1 + t2));
    // (r,1,2), (r,1,3), (r,2,3)
    const std::array<double, 9> terms{dr[0][p], grad[1][0][p], grad[0][1][p],
                                      dr[1][p], grad[2][0][p], grad[0][2][p],
                                      dr[2][p], grad[2][1][p], grad[1][2][p]};
    for (int q = 0; q < 3; ++q)
      out.radial = std::max(out.radial, std::abs(terms[3 * q] - terms[3 * q + 1] + terms[3 * q + 2]));
    for (double v : terms) out.scale = std::max(out.scale, std::abs(v));
    out.scale = std::max({out.scale, std::abs(t0), std::abs(t1), std::abs(t2)});
  }
  return out;
}

inline constexpr double kClosedSpectralTol = 1e-9;
inline constexpr double kClosedRadialTol = 1e-3;

inline void require_closed(const NeckField& nf) {
  for (int i = 0; i < 3; ++i) {
    const Closedness c = closedness(nf.grid, nf.pert[i]);
    if (c.relative_spectral() > kClosedSpectralTol || c.relative_radial() > kClosedRadialTol)
      fail(ErrorCode::NotClosed, "neck form " + std::to_string(i + 1) + " is not closed (relative residual " +
                                     std::to_string(std::max(c.relative_spectral(), c.relative_radial())) + ")");
  }
}

// ---- primitive phi ----

struct PrimitivePhi {
  std::array<NeckOneForm, 3> phi;
  double identity_residual = 0.0;  // max |d phi - (pert - b(rho))|
};

inline PrimitivePhi primitive_phi(const NeckField& nf) {
  validate(nf);
  require_closed(nf);
  const NeckGrid& g = nf.grid;
  const TorusGrid<3> tg = g.torus();
  const std::size_t T = g.torus_size();
  const int kc = g.center();
  PrimitivePhi out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.phi[i][j] = radial_primitive(g, nf.pert[i][j]);
    std::array<NeckOneForm, 3> grad;
    for (int j = 0; j < 3; ++j) grad[j] = theta_gradient(g, tg, out.phi[i][j]);
    for (int j = 0; j < 3; ++j) {
      const std::vector<double> d = radial_derivative(g, out.phi[i][j]);
      for (std::size_t p = 0; p < g.size(); ++p)
        out.identity_residual = std::max(out.identity_residual, std::abs(d[p] - nf.pert[i][j][p]));
    }
    // (12), (13), (23): d_j phi_k - d_k phi_j
    const std::array<std::array<int, 2>, 3> jk{{{0, 1}, {0, 2}, {1, 2}}};
    for (int q = 0; q < 3; ++q) {
      const int j = jk[q][0], k = jk[q][1];
      for (std::size_t p = 0; p < g.size(); ++p) {
        const std::size_t s = p % T;
        const double lhs = grad[k][j][p] - grad[j][k][p];
        const double rhs = nf.pert[i][3 + q][p] - nf.pert[i][3 + q][kc * T + s];
        out.identity_residual = std::max(out.identity_residual, std::abs(lhs - rhs));
      }
    }
  }
  return out;
}

// ---- constant representative on T^3 ----

// torus 2-form (12), (13), (23) components on the n_theta^3 grid
using TorusTwoForm = std::array<std::vector<double>, 3>;

struct ConstantRepresentative {
  Vec3 constant = Vec3::Zero();  // (12), (13), (23)
  std::array<Spectrum, 3> primitive;  // eta with d eta = b - constant
  double exactness_residual = 0.0;
};

inline std::array<Spectrum, 3> torus_primitive(const TorusGrid<3>& tg, const std::array<Spectrum, 3>& b) {
  // full antisymmetric B_jk from (12), (13), (23)
  std::array<Spectrum, 3> eta;
  for (auto& e : eta) e.assign(tg.size(), cplx(0.0));
  for (std::size_t s = 0; s < tg.size(); ++s) {
    const double k2 = tg.k2()[s];
    if (k2 == 0.0) continue;
    Eigen::Matrix<cplx, 3, 3> B = Eigen::Matrix<cplx, 3, 3>::Zero();
    B(0, 1) = b[0][s], B(1, 0) = -b[0][s];
    B(0, 2) = b[1][s], B(2, 0) = -b[1][s];
    B(1, 2) = b[2][s], B(2, 1) = -b[2][s];
    for (int k = 0; k < 3; ++k) {
      cplx v = 0.0;
      for (int j = 0; j < 3; ++j) v += tg.kappa(j)[s] * B(j, k);
      eta[k][s] = cplx(0.0, -1.0) * v / k2;
    }
  }
  return eta;
}

inline std::array<Spectrum, 3> torus_d1(const TorusGrid<3>& tg, const std::array<Spectrum, 3>& eta) {
  std::array<Spectrum, 3> out;
  const std::array<std::array<int, 2>, 3> jk{{{0, 1}, {0, 2}, {1, 2}}};
  for (int q = 0; q < 3; ++q) {
    out[q].assign(tg.size(), cplx(0.0));
    const int j = jk[q][0], k = jk[q][1];
    for (std::size_t s = 0; s < tg.size(); ++s)
      out[q][s] = cplx(0.0, tg.kappa(j)[s]) * eta[k][s] - cplx(0.0, tg.kappa(k)[s]) * eta[j][s];
  }
  return out;
}

inline double torus_closedness(const TorusGrid<3>& tg, const std::array<Spectrum, 3>& b, double* scale = nullptr) {
  double res = 0.0, sc = 0.0;
  for (std::size_t s = 0; s < tg.size(); ++s) {
    const cplx t0 = cplx(0.0, tg.kappa(0)[s]) * b[2][s];
    const cplx t1 = cplx(0.0, tg.kappa(1)[s]) * b[1][s];
    const cplx t2 = cplx(0.0, tg.kappa(2)[s]) * b[0][s];
    res = std::max(res, std::abs(t0 - t1 + t2));
    sc = std::max({sc, std::abs(t0), std::abs(t1), std::abs(t2)});
  }
  if (scale) *scale = sc;
  return res;
}

inline ConstantRepresentative constant_representative(const TorusGrid<3>& tg, const TorusTwoForm& b) {
  std::array<Spectrum, 3> sp;
  for (int q = 0; q < 3; ++q) {
    if (b[q].size() != tg.size()) fail(ErrorCode::InvalidArgument, "torus 2-form has wrong sample count");
    sp[q] = tg.to_spectrum(b[q]);
  }
  double scale = 0.0;
  const double res = torus_closedness(tg, sp, &scale);
  if (res > kClosedSpectralTol * std::max(scale, 1e-300) && res > 1e-300)
    fail(ErrorCode::NotClosed, "torus 2-form is not closed");
  ConstantRepresentative out;
  for (int q = 0; q < 3; ++q) out.constant[q] = sp[q][0].real();
  out.primitive = torus_primitive(tg, sp);
  const std::array<Spectrum, 3> deta = torus_d1(tg, out.primitive);
  for (int q = 0; q < 3; ++q) {
    Spectrum diff = sp[q];
    diff[0] -= out.constant[q];
    for (std::size_t s = 0; s < tg.size(); ++s) diff[s] -= deta[q][s];
    for (double v : tg.to_physical(diff)) out.exactness_residual = std::max(out.exactness_residual, std::abs(v));
  }
  return out;
}

// ---- orientation of the identification ----

// Sign picked up by each basis component under (r, th) -> (2 rho - r, Theta - th):
// dr^dth_j -> (-1)(-1) dr^dth_j, dth_j^dth_k -> (-1)(-1) dth_j^dth_k.
inline constexpr std::array<double, 6> kReflectionSign{+1, +1, +1, +1, +1, +1};

// f(Theta - theta) on the torus grid
inline std::vector<double> reflect_torus(const TorusGrid<3>& tg, const std::vector<double>& f, const Vec3& Theta) {
  const Spectrum sp = tg.to_spectrum(f);
  Spectrum out(tg.size(), cplx(0.0));
  for (std::size_t s = 0; s < tg.size(); ++s) {
    if (!tg.in_band(s)) continue;
    auto m = tg.modes(s);
    const double phase = tg.kappa(0)[s] * Theta[0] + tg.kappa(1)[s] * Theta[1] + tg.kappa(2)[s] * Theta[2];
    for (auto& v : m) v = -v;
    out[tg.slot_of_mode(m)] = sp[s] * std::polar(1.0, phase);
  }
  return tg.to_physical(out);
}

// Pullback of neck 2 to the chart of neck 1: r2 = 2 rho - r1, th2 = Theta - th1.
inline NeckComponents reflect_neck(const NeckGrid& g, const NeckComponents& c, const Vec3& Theta) {
  const TorusGrid<3> tg = g.torus();
  const std::size_t T = g.torus_size();
  NeckComponents out = zero_components(g);
  for (int comp = 0; comp < 6; ++comp)
    for (int k = 0; k < g.n_r; ++k) {
      const int k2 = g.n_r - 1 - k;
      const std::vector<double> slice(c[comp].begin() + k2 * T, c[comp].begin() + (k2 + 1) * T);
      const std::vector<double> r = reflect_torus(tg, slice, Theta);
      for (std::size_t s = 0; s < T; ++s) out[comp][k * T + s] = kReflectionSign[comp] * r[s];
    }
  return out;
}

// ---- gluing ----

struct GluedNeck {
  NeckGrid grid;  // t = r - rho in [-1, 1]
  std::array<NeckComponents, 3> pert;      // omega_{rho,Theta} - omega_flat
  std::array<NeckComponents, 3> pert_alt;  // omega_M2 - d(chi psi) - omega_flat
  std::array<NeckComponents, 3> m1, m2;    // both necks in the gluing chart
  std::array<NeckOneForm, 3> psi;
  std::vector<double> chi, dchi;
  double consistency = 0.0;      // max |pert - pert_alt|
  double closed_spectral = 0.0;  // max dth^3 residual over the three forms
  double closed_radial = 0.0;
  double psi_residual = 0.0;      // max |d psi - (omega_M2 - omega_M1)|
  double sup_deviation = 0.0;     // max |omega_{rho,Theta} - omega_flat|
  double sup_from_m1 = 0.0;       // max |omega_{rho,Theta} - omega_M1| on chi = 1
  double sup_from_m2 = 0.0;       // max |omega_{rho,Theta} - omega_M2| on chi = 0
};

inline GluedNeck glue_forms(const NeckField& nf1, const NeckField& nf2, const GluingParams& gp,
                            double constant_tol = 1e-12) {
  validate(nf1);
  validate(nf2);
  const NeckGrid& g = nf1.grid;
  if (g.n_r != nf2.grid.n_r || g.n_theta != nf2.grid.n_theta ||
      (g.lattice.basis() - nf2.grid.lattice.basis()).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorCode::InvalidArgument, "necks must share lattice and grid");
  if (std::abs(g.rho - gp.rho) > 1e-12 || std::abs(nf2.grid.rho - gp.rho) > 1e-12)
    fail(ErrorCode::InvalidArgument, "necks must be sampled around the gluing radius");
  require_closed(nf1);
  require_closed(nf2);

  const TorusGrid<3> tg = g.torus();
  const std::size_t T = g.torus_size();
  const int kc = g.center();
  GluedNeck out;
  out.grid = g;
  out.chi.resize(g.n_r);
  out.dchi.resize(g.n_r);
  for (int k = 0; k < g.n_r; ++k) {
    const double t = g.r_at(k) - g.rho;
    out.chi[k] = gp.cutoff.chi(t);
    out.dchi[k] = gp.cutoff.dchi(t);
  }

  for (int i = 0; i < 3; ++i) {
    out.m1[i] = nf1.pert[i];
    out.m2[i] = reflect_neck(g, nf2.pert[i], gp.Theta);
    NeckComponents diff = zero_components(g);
    for (int c = 0; c < 6; ++c)
      for (std::size_t p = 0; p < g.size(); ++p) diff[c][p] = out.m2[i][c][p] - out.m1[i][c][p];

    // constant parts of the dth^dth components must agree
    std::array<Spectrum, 3> b0;
    double scale = 0.0;
    for (int q = 0; q < 3; ++q) {
      const std::vector<double> slice(diff[3 + q].begin() + kc * T, diff[3 + q].begin() + (kc + 1) * T);
      b0[q] = tg.to_spectrum(slice);
      for (int c = 0; c < 6; ++c)
        for (std::size_t p = 0; p < g.size(); ++p) scale = std::max(scale, std::abs(out.m1[i][c][p]) + std::abs(out.m2[i][c][p]));
    }
    for (int q = 0; q < 3; ++q)
      if (std::abs(b0[q][0]) > constant_tol * std::max(1.0, scale))
        fail(ErrorCode::ConstantMismatch,
             "constant dtheta^dtheta parts of form " + std::to_string(i + 1) + " differ after the identification");

    // psi_j = int_0^t D_{a_j} + psi_T_j, d_th psi_T = D_b(t = 0)
    const std::array<Spectrum, 3> psiT = torus_primitive(tg, b0);
    for (int j = 0; j < 3; ++j) {
      out.psi[i][j] = radial_primitive(g, diff[j]);
      const std::vector<double> pt = tg.to_physical(psiT[j]);
      for (int k = 0; k < g.n_r; ++k)
        for (std::size_t s = 0; s < T; ++s) out.psi[i][j][k * T + s] += pt[s];
    }

    out.pert[i] = zero_components(g);
    out.pert_alt[i] = zero_components(g);
    for (int c = 0; c < 6; ++c)
      for (int k = 0; k < g.n_r; ++k)
        for (std::size_t s = 0; s < T; ++s) {
          const std::size_t p = k * T + s;
          double a = out.m1[i][c][p] + (1.0 - out.chi[k]) * diff[c][p];
          double b = out.m2[i][c][p] - out.chi[k] * diff[c][p];
          if (c < 3) {
            a -= out.dchi[k] * out.psi[i][c][p];
            b -= out.dchi[k] * out.psi[i][c][p];
          }
          out.pert[i][c][p] = a;
          out.pert_alt[i][c][p] = b;
        }

    for (int c = 0; c < 6; ++c)
      for (int k = 0; k < g.n_r; ++k)
        for (std::size_t s = 0; s < T; ++s) {
          const std::size_t p = k * T + s;
          out.consistency = std::max(out.consistency, std::abs(out.pert[i][c][p] - out.pert_alt[i][c][p]));
          out.sup_deviation = std::max(out.sup_deviation, std::abs(out.pert[i][c][p]));
          if (out.chi[k] == 1.0) out.sup_from_m1 = std::max(out.sup_from_m1, std::abs(out.pert[i][c][p] - out.m1[i][c][p]));
          if (out.chi[k] == 0.0) out.sup_from_m2 = std::max(out.sup_from_m2, std::abs(out.pert[i][c][p] - out.m2[i][c][p]));
        }

    const Closedness cl = closedness(g, out.pert[i]);
    out.closed_spectral = std::max(out.closed_spectral, cl.spectral);
    out.closed_radial = std::max(out.closed_radial, cl.radial);

    // d psi against the difference
    std::array<NeckOneForm, 3> grad;
    for (int j = 0; j < 3; ++j) grad[j] = theta_gradient(g, tg, out.psi[i][j]);
    for (int j = 0; j < 3; ++j) {
      const std::vector<double> d = radial_derivative(g, out.psi[i][j]);
      for (std::size_t p = 0; p < g.size(); ++p) out.psi_residual = std::max(out.psi_residual, std::abs(d[p] - diff[j][p]));
    }
    const std::array<std::array<int, 2>, 3> jk{{{0, 1}, {0, 2}, {1, 2}}};
    for (int q = 0; q < 3; ++q)
      for (std::size_t p = 0; p < g.size(); ++p) {
        const double lhs = grad[jk[q][1]][jk[q][0]][p] - grad[jk[q][0]][jk[q][1]][p];
        out.psi_residual = std::max(out.psi_residual, std::abs(lhs - diff[3 + q][p]));
      }
  }
  return out;
}

// ---- volume normalization ----

// V = (1/2) det(omega^i ^ omega^j)^{1/3}, triple rescaled to this volume.
inline FormTriple volume_normalize(const FormTriple& t) {
  Mat3 w;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) w(i, j) = wedge(t.omega[i], t.omega[j]);
  const double d = w.determinant();
  if (!(d > 0.0)) fail(ErrorCode::DegenerateGram, "det(omega^i ^ omega^j) <= 0");
  FormTriple out = t;
  out.volume = 0.5 * std::cbrt(d);
  return out;
}

struct VolumeNormalization {
  double volume_minus_one = 0.0;  // V - 1
  Mat3 gram_minus_id = Mat3::Zero();
};

// Same computation for omega = omega_flat + p, resolving tiny p without cancellation.
inline VolumeNormalization volume_normalize_perturbation(const std::array<TwoForm, 3>& p) {
  const FormTriple flat = flat_triple();
  Mat3 e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      e(i, j) = wedge(flat.omega[i], p[j]) + wedge(p[i], flat.omega[j]) + wedge(p[i], p[j]);
  const Mat3 m = 0.5 * e;
  const double c1 = m.trace();
  const double c2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                    m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double c3 = m.determinant();
  const double delta = c1 + c2 + c3;  // det(Id + m) - 1
  if (!(delta > -1.0)) fail(ErrorCode::DegenerateGram, "det(omega^i ^ omega^j) <= 0");
  VolumeNormalization out;
  out.volume_minus_one = std::expm1(std::log1p(delta) / 3.0);
  const double v = 1.0 + out.volume_minus_one;
  out.gram_minus_id = (e - 2.0 * out.volume_minus_one * Mat3::Identity()) / (2.0 * v);
  return out;
}

struct NeckVolumeReport {
  double max_gram_deviation = 0.0;
  double max_volume_deviation = 0.0;
  double max_det_error = 0.0;  // |det(gram) - 1|
  std::size_t worst_point = 0;
};

inline NeckVolumeReport volume_normalize(const NeckGrid& g, const std::array<NeckComponents, 3>& pert) {
  NeckVolumeReport out;
  for (std::size_t p = 0; p < g.size(); ++p) {
    std::array<TwoForm, 3> w;
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 6; ++c) w[i][c] = pert[i][c][p];
    VolumeNormalization vn;
    try {
      vn = volume_normalize_perturbation(w);
    } catch (const Error& e) {
      fail(ErrorCode::DegenerateGram, "degenerate wedge Gram matrix at neck sample " + std::to_string(p));
    }
    const double dev = vn.gram_minus_id.cwiseAbs().maxCoeff();
    if (dev > out.max_gram_deviation) {
      out.max_gram_deviation = dev;
      out.worst_point = p;
    }
    out.max_volume_deviation = std::max(out.max_volume_deviation, std::abs(vn.volume_minus_one));
    out.max_det_error = std::max(out.max_det_error, std::abs((Mat3::Identity() + vn.gram_minus_id).determinant() - 1.0));
  }
  return out;
}

// ---- synthetic necks ----

// eta = A e^{-decay r} cos(kappa_m . theta + phase) dx^component (component 0 = dr)
struct NeckMode {
  int form = 0;
  int component = 1;
  std::array<int, 3> m{1, 0, 0};
  double amplitude = 1e-3;
  double phase = 0.0;
  double decay = -1.0;  // negative: |kappa_m|
};

struct SyntheticNeck {
  NeckGrid grid;
  double delta = 0.01;
  std::vector<NeckMode> modes;
  std::array<TwoForm, 3> constant{TwoForm::Zero(), TwoForm::Zero(), TwoForm::Zero()};
};

inline double mode_decay(const NeckGrid& g, const NeckMode& md) {
  const TorusGrid<3> tg(g.n_theta, g.lattice.basis());
  return md.decay >= 0.0 ? md.decay : tg.wavevector(md.m).norm();
}

// omega - omega_flat = constant + d eta, evaluated analytically
inline NeckField make_synthetic_neck(const SyntheticNeck& spec) {
  NeckField nf = flat_neck(spec.grid, spec.delta);
  const NeckGrid& g = spec.grid;
  const TorusGrid<3> tg = g.torus();
  for (const NeckMode& md : spec.modes) {
    for (int a = 0; a < 3; ++a)
      if (std::abs(md.m[a]) > tg.band_limit()) fail(ErrorCode::InvalidArgument, "synthetic mode outside the torus band");
    if (md.form < 0 || md.form > 2 || md.component < 0 || md.component > 3)
      fail(ErrorCode::InvalidArgument, "synthetic mode index out of range");
  }
  const std::size_t T = g.torus_size();
  std::vector<Vec3> kaps;
  std::vector<double> lams;
  for (const NeckMode& md : spec.modes) {
    kaps.push_back(tg.wavevector(md.m));
    lams.push_back(md.decay >= 0.0 ? md.decay : kaps.back().norm());
  }
  for (int k = 0; k < g.n_r; ++k) {
    const double r = g.r_at(k);
    for (std::size_t s = 0; s < T; ++s) {
      const Vec3 theta = tg.point(s);
      for (std::size_t q = 0; q < spec.modes.size(); ++q) {
        const NeckMode& md = spec.modes[q];
        const Vec3& kap = kaps[q];
        const double lam = lams[q];
        const double env = md.amplitude * std::exp(-lam * r);
        const double arg = kap.dot(theta) + md.phase;
        // partials of eta_component along x^0 = r, x^j = theta^j
        Vec4 dpart;
        dpart[0] = -lam * env * std::cos(arg);
        for (int j = 0; j < 3; ++j) dpart[1 + j] = -env * std::sin(arg) * kap[j];
        // d(f dx^c) = sum_a d_a f dx^a ^ dx^c
        for (int a = 0; a < 4; ++a) {
          if (a == md.component) continue;
          const int idx = pair_index(a, md.component);
          const double sign = a < md.component ? 1.0 : -1.0;
          nf.pert[md.form][idx][k * T + s] += sign * dpart[a];
        }
      }
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 6; ++c) nf.pert[i][c][k * T + s] += spec.constant[i][c];
    }
  }
  return nf;
}

}  // namespace hklab
