#pragma once

// Flat ALG and ALH model geometries, fiber-type table, lattices and lambda1.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "hklab/error.hpp"
#include "hklab/form_algebra.hpp"

namespace hklab {

using cplx = std::complex<double>;

enum class FiberType { Regular, I0s, II, IIs, III, IIIs, IV, IVs };

inline constexpr std::array<FiberType, 8> kFiberTypes{FiberType::Regular, FiberType::I0s, FiberType::II,
                                                      FiberType::IIs,     FiberType::III, FiberType::IIIs,
                                                      FiberType::IV,      FiberType::IVs};

inline std::string_view to_string(FiberType t) {
  switch (t) {
    case FiberType::Regular: return "Regular";
    case FiberType::I0s: return "I0*";
    case FiberType::II: return "II";
    case FiberType::IIs: return "II*";
    case FiberType::III: return "III";
    case FiberType::IIIs: return "III*";
    case FiberType::IV: return "IV";
    case FiberType::IVs: return "IV*";
  }
  return "?";
}

inline FiberType parse_fiber_type(std::string_view s) {
  for (FiberType t : kFiberTypes)
    if (to_string(t) == s) return t;
  fail(ErrorCode::InvalidArgument, "unknown fiber type '" + std::string(s) + "'");
}

struct Rational {
  int num = 1;
  int den = 1;
  double value() const { return static_cast<double>(num) / den; }
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct AlgParameters {
  Rational beta;
  std::optional<cplx> tau;  // empty: free in the upper half plane
};

inline AlgParameters alg_parameters(FiberType t) {
  const cplx rho = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const cplx i{0.0, 1.0};
  switch (t) {
    case FiberType::Regular: return {{1, 1}, std::nullopt};
    case FiberType::I0s: return {{1, 2}, std::nullopt};
    case FiberType::II: return {{1, 6}, rho};
    case FiberType::IIs: return {{5, 6}, rho};
    case FiberType::III: return {{1, 4}, i};
    case FiberType::IIIs: return {{3, 4}, i};
    case FiberType::IV: return {{1, 3}, rho};
    case FiberType::IVs: return {{2, 3}, rho};
  }
  fail(ErrorCode::InvalidArgument, "unknown fiber type");
}

struct ALGModel {
  FiberType fiber_type = FiberType::Regular;
  Rational beta{1, 1};
  cplx tau{0.0, 1.0};
  double l = 1.0;
  double R = 1.0;
};

// Builds a model with beta and tau from the table; tau only used for free types.
inline ALGModel make_alg_model(FiberType t, double l = 1.0, double R = 1.0, cplx free_tau = {0.0, 1.0}) {
  const AlgParameters p = alg_parameters(t);
  return ALGModel{t, p.beta, p.tau.value_or(free_tau), l, R};
}

inline void validate(const ALGModel& m, double tol = 1e-12) {
  const AlgParameters p = alg_parameters(m.fiber_type);
  if (!(m.beta == p.beta))
    fail(ErrorCode::InconsistentModel, "beta does not match fiber type " + std::string(to_string(m.fiber_type)));
  if (!(m.tau.imag() > 0.0)) fail(ErrorCode::InconsistentModel, "tau must lie in the upper half plane");
  if (p.tau && std::abs(m.tau - *p.tau) > tol)
    fail(ErrorCode::InconsistentModel, "tau does not match fiber type " + std::string(to_string(m.fiber_type)));
  if (!(m.l > 0.0) || !(m.R > 0.0)) fail(ErrorCode::InconsistentModel, "l and R must be positive");
}

inline double sector_angle(const ALGModel& m) { return 2.0 * std::numbers::pi * m.beta.value(); }

// Moves (u, v) into the half-open sector arg u in [0, 2 pi beta) by deck maps.
inline std::pair<cplx, cplx> reduce_to_sector(const ALGModel& m, cplx u, cplx v) {
  const double width = sector_angle(m);
  double arg = std::arg(u);
  if (arg < 0.0) arg += 2.0 * std::numbers::pi;
  const double k = std::floor(arg / width);
  const cplx rot = std::polar(1.0, -k * width);
  u *= rot;
  v *= std::conj(rot);
  if (std::arg(u) < 0.0 && std::arg(u) > -1e-14) u = {std::abs(u), 0.0};
  return {u, v};
}

// Real matrix of (u, v) -> (e^{2 pi i beta} u, e^{-2 pi i beta} v) in (Re u, Im u, Re v, Im v).
inline Mat4 deck_map(const ALGModel& m) {
  const double a = sector_angle(m);
  Mat4 d = Mat4::Zero();
  d(0, 0) = std::cos(a), d(0, 1) = -std::sin(a), d(1, 0) = std::sin(a), d(1, 1) = std::cos(a);
  d(2, 2) = std::cos(a), d(2, 3) = std::sin(a), d(3, 2) = -std::sin(a), d(3, 3) = std::cos(a);
  return d;
}

// Fiber lattice translation v -> v + l (p + q tau).
inline cplx fiber_translate(const ALGModel& m, cplx v, int p, int q) { return v + m.l * (double(p) + double(q) * m.tau); }

// omega^1 = (i/2)(du^du* + dv^dv*) = e01 + e23, omega^+ = du^dv, realified;
// the triple is constant in these coordinates.
inline FormTriple alg_model_forms(const ALGModel& m, cplx u, cplx /*v*/) {
  if (std::abs(u) < m.R) fail(ErrorCode::OutOfChart, "|u| < R");
  double arg = std::arg(u);
  if (arg < 0.0) arg += 2.0 * std::numbers::pi;
  if (m.beta.value() < 1.0 && arg >= sector_angle(m))
    fail(ErrorCode::OutOfChart, "arg u outside the sector [0, 2 pi beta)");
  return flat_triple();
}

// omega^+ = du ^ dv as (Re, Im) 2-forms
inline std::pair<TwoForm, TwoForm> alg_holomorphic_form(const ALGModel& m, cplx u, cplx v) {
  const FormTriple t = alg_model_forms(m, u, v);
  return {t.omega[1], t.omega[2]};
}

// max |D^* omega - omega| over omega^1, Re omega^+, Im omega^+ at (u, v) in the sector,
// D the deck map; the image point is evaluated through reduce_to_sector.
inline double deck_invariance_residual(const ALGModel& m, cplx u, cplx v) {
  const FormTriple here = alg_model_forms(m, u, v);
  const Mat4 d = deck_map(m);
  const Vec4 img = d * Vec4(u.real(), u.imag(), v.real(), v.imag());
  const auto [ru, rv] = reduce_to_sector(m, cplx(img[0], img[1]), cplx(img[2], img[3]));
  const FormTriple there = pullback(alg_model_forms(m, ru, rv), d);
  double r = 0.0;
  for (int i = 0; i < 3; ++i) r = std::max(r, (there.omega[i] - here.omega[i]).cwiseAbs().maxCoeff());
  return r;
}

// Rank-3 lattice with basis vectors as rows of A.
class Lattice3 {
 public:
  Lattice3() : a_(Mat3::Identity()) {}
  explicit Lattice3(const Mat3& basis_rows) : a_(basis_rows) {
    const double scale = std::max(1e-300, a_.rowwise().norm().prod());
    if (!std::isfinite(a_.determinant()) || std::abs(a_.determinant()) <= 1e-14 * scale)
      fail(ErrorCode::SingularLattice, "lattice basis is singular");
  }

  const Mat3& basis() const { return a_; }
  Vec3 vector(int alpha) const { return a_.row(alpha).transpose(); }
  double covolume() const { return std::abs(a_.determinant()); }

 private:
  Mat3 a_;
};

inline Lattice3 dual_lattice(const Lattice3& l) { return Lattice3(l.basis().inverse().transpose()); }

struct ShortestVector {
  Vec3 vector;
  Eigen::Vector3i coeffs;
  double norm = 0.0;
};

// Exhaustive search over |n_b| <= floor(r0 |v*_b|) where v*_b are the dual rows.
inline ShortestVector shortest_vector(const Lattice3& l) {
  const Mat3& a = l.basis();
  const Mat3 dual = a.inverse().transpose();
  double r0 = a.rowwise().norm().minCoeff();
  std::array<int, 3> bound{};
  double box = 1.0;
  for (int b = 0; b < 3; ++b) {
    bound[b] = static_cast<int>(std::floor(r0 * dual.row(b).norm() * (1.0 + 1e-12)));
    box *= 2.0 * bound[b] + 1.0;
  }
  if (box > 2e8) fail(ErrorCode::InvalidArgument, "lattice too skewed for exhaustive search");
  ShortestVector best;
  best.norm = std::numeric_limits<double>::infinity();
  for (int i = -bound[0]; i <= bound[0]; ++i)
    for (int j = -bound[1]; j <= bound[1]; ++j)
      for (int k = -bound[2]; k <= bound[2]; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const Vec3 v = i * a.row(0).transpose() + j * a.row(1).transpose() + k * a.row(2).transpose();
        const double n = v.norm();
        if (n < best.norm) best = {v, Eigen::Vector3i(i, j, k), n};
      }
  return best;
}

inline double lambda1(const Lattice3& l) { return 2.0 * std::numbers::pi * shortest_vector(dual_lattice(l)).norm; }

struct ALHModel {
  Lattice3 lattice;
  double R = 1.0;
};

// omega^1 = dr^dth1 + dth2^dth3 and cyclic, in (r, th1, th2, th3)
inline FormTriple alh_model_triple(const ALHModel& /*m*/) { return flat_triple(); }

// Same triple in (r, x1, x2, x3) with th = A^T x, x in [0,1)^3.
inline FormTriple alh_model_triple_lattice_coords(const ALHModel& m) {
  const Mat3& a = m.lattice.basis();
  if (a.determinant() <= 0.0) fail(ErrorCode::InvalidArgument, "lattice basis must be positively oriented");
  Mat4 jac = Mat4::Identity();
  jac.block<3, 3>(1, 1) = a.transpose();
  return pullback(alh_model_triple(m), jac);
}

}  // namespace hklab
