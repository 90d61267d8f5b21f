#pragma once

// Pointwise exterior algebra on R^4. 2-forms are stored in the basis
// e01, e02, e03, e12, e13, e23 (eab = e^a ^ e^b).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

#include "hklab/error.hpp"

namespace hklab {

using TwoForm = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

// index pairs of the 2-form basis
inline constexpr std::array<std::array<int, 2>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

inline int pair_index(int a, int b) {
  if (a > b) std::swap(a, b);
  for (int k = 0; k < 6; ++k)
    if (kPairs[k][0] == a && kPairs[k][1] == b) return k;
  return -1;
}

inline TwoForm basis_form(int a, int b) {
  TwoForm w = TwoForm::Zero();
  w[pair_index(a, b)] = a < b ? 1.0 : -1.0;
  return w;
}

// coefficient of a^b on e0123
inline double wedge(const TwoForm& a, const TwoForm& b) {
  return a[0] * b[5] + a[5] * b[0] - a[1] * b[4] - a[4] * b[1] + a[2] * b[3] + a[3] * b[2];
}

// wedge(a, b) = a^T Q b
inline const Mat6& wedge_pairing() {
  static const Mat6 q = [] {
    Mat6 m = Mat6::Zero();
    m(0, 5) = m(5, 0) = 1.0;
    m(1, 4) = m(4, 1) = -1.0;
    m(2, 3) = m(3, 2) = 1.0;
    return m;
  }();
  return q;
}

// Euclidean Hodge star on 2-forms, column j = *(basis j)
inline const Mat6& euclidean_star() {
  static const Mat6 s = [] {
    Mat6 m = Mat6::Zero();
    m(5, 0) = 1.0;   // *e01 = e23
    m(4, 1) = -1.0;  // *e02 = -e13
    m(3, 2) = 1.0;   // *e03 = e12
    m(2, 3) = 1.0;   // *e12 = e03
    m(1, 4) = -1.0;  // *e13 = -e02
    m(0, 5) = 1.0;   // *e23 = e01
    return m;
  }();
  return s;
}

// Omega[a][b] = w(e_a, e_b)
inline Mat4 to_matrix(const TwoForm& w) {
  Mat4 m = Mat4::Zero();
  for (int k = 0; k < 6; ++k) {
    m(kPairs[k][0], kPairs[k][1]) = w[k];
    m(kPairs[k][1], kPairs[k][0]) = -w[k];
  }
  return m;
}

inline TwoForm from_matrix(const Mat4& m) {
  TwoForm w;
  for (int k = 0; k < 6; ++k) w[k] = 0.5 * (m(kPairs[k][0], kPairs[k][1]) - m(kPairs[k][1], kPairs[k][0]));
  return w;
}

struct FormTriple {
  std::array<TwoForm, 3> omega{TwoForm::Zero(), TwoForm::Zero(), TwoForm::Zero()};
  double volume = 1.0;
};

inline FormTriple flat_triple() {
  FormTriple t;
  t.omega[0] << 1, 0, 0, 0, 0, 1;   // e01 + e23
  t.omega[1] << 0, 1, 0, 0, -1, 0;  // e02 + e31
  t.omega[2] << 0, 0, 1, 1, 0, 0;   // e03 + e12
  t.volume = 1.0;
  return t;
}

// A_ij = omega^i ^ omega^j / (2 V)
inline Mat3 gram(const FormTriple& t) {
  if (!(t.volume > 0.0)) fail(ErrorCode::InvalidArgument, "gram: volume must be positive");
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = wedge(t.omega[i], t.omega[j]) / (2.0 * t.volume);
  return a;
}

inline bool is_admissible(const FormTriple& t, double tol = 1e-8) {
  return (gram(t) - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol;
}

inline Eigen::Matrix<double, 6, 3> stack(const FormTriple& t) {
  Eigen::Matrix<double, 6, 3> w;
  for (int i = 0; i < 3; ++i) w.col(i) = t.omega[i];
  return w;
}

// Involution with +1 eigenspace span{omega^i} and -1 eigenspace its
// wedge-orthogonal complement.
inline Mat6 star_from_triple(const FormTriple& t) {
  const Eigen::Matrix<double, 6, 3> w = stack(t);
  const Mat6& q = wedge_pairing();
  const Mat3 g = w.transpose() * q * w;
  Eigen::SelfAdjointEigenSolver<Mat3> es(g);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() <= 1e-12 * scale)
    fail(ErrorCode::DegenerateTriple, "wedge Gram matrix of the triple is not positive definite");
  const Mat6 proj = w * g.inverse() * w.transpose() * q;
  return 2.0 * proj - Mat6::Identity();
}

inline double levi_civita4(int a, int b, int c, int d) {
  const std::array<int, 4> p{a, b, c, d};
  double s = 1.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      if (p[i] == p[j]) return 0.0;
      if (p[i] > p[j]) s = -s;
    }
  return s;
}

// Symmetric bilinear form sum eps_ijk Om^i_ac Om^j_bd Om^k_ef eps^cdef;
// proportional to the metric of the conformal class fixed by the triple.
inline Mat4 urbantke_form(const FormTriple& t) {
  std::array<Mat4, 3> om;
  for (int i = 0; i < 3; ++i) om[i] = to_matrix(t.omega[i]);
  static const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}}};
  static const std::array<double, 6> sgn{1, 1, 1, -1, -1, -1};
  Mat4 m = Mat4::Zero();
  for (int p = 0; p < 6; ++p) {
    const Mat4& x = om[perms[p][0]];
    const Mat4& y = om[perms[p][1]];
    const Mat4& z = om[perms[p][2]];
    for (int c = 0; c < 4; ++c)
      for (int d = 0; d < 4; ++d)
        for (int e = 0; e < 4; ++e)
          for (int f = 0; f < 4; ++f) {
            const double eps = levi_civita4(c, d, e, f);
            if (eps == 0.0) continue;
            const double zef = z(e, f) * eps * sgn[p];
            if (zef == 0.0) continue;
            for (int a = 0; a < 4; ++a)
              for (int b = 0; b < 4; ++b) m(a, b) += x(a, c) * y(b, d) * zef;
          }
  }
  return 0.5 * (m + m.transpose());
}

enum class Orientation { Positive, Negative };

struct MetricQuaternion {
  Mat4 g = Mat4::Identity();
  std::array<Mat4, 3> J{Mat4::Identity(), Mat4::Identity(), Mat4::Identity()};  // I, J, K
  Orientation orientation = Orientation::Positive;
  double volume = 1.0;  // volume after gram renormalization

  const Mat4& I() const { return J[0]; }
  const Mat4& Jm() const { return J[1]; }
  const Mat4& K() const { return J[2]; }
};

// Reconstructs (g, I, J, K) with omega^i(X,Y) = g(J_i X, Y) and sqrt(det g) = V.
// A triple with gram = c Id is accepted and its volume rescaled by c.
inline MetricQuaternion metric_from_triple(const FormTriple& t, double tol = 1e-8) {
  if (!(t.volume > 0.0)) fail(ErrorCode::InvalidArgument, "metric_from_triple: volume must be positive");
  const Mat3 a = gram(t);
  Eigen::SelfAdjointEigenSolver<Mat3> es(a);
  const double top = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() <= 1e-12 * top)
    fail(ErrorCode::DegenerateTriple, "wedge Gram matrix of the triple is not positive definite");
  const double c = a.trace() / 3.0;
  const double dev = (a / c - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (dev > tol) fail(ErrorCode::IncompatibleTriple, "gram deviates from a multiple of Id by " + std::to_string(dev));

  MetricQuaternion out;
  out.volume = c * t.volume;
  Mat4 m = urbantke_form(t);
  Eigen::SelfAdjointEigenSolver<Mat4> ms(m);
  if (ms.eigenvalues().maxCoeff() < 0.0) {
    m = -m;
    ms.compute(m);
  }
  const double mscale = ms.eigenvalues().cwiseAbs().maxCoeff();
  if (!(ms.eigenvalues().minCoeff() > 1e-12 * mscale))
    fail(ErrorCode::DegenerateTriple, "conformal structure of the triple is not definite");
  const double detm = ms.eigenvalues().prod();
  out.g = m * std::pow(out.volume * out.volume / detm, 0.25);
  const Mat4 ginv = out.g.inverse();
  for (int i = 0; i < 3; ++i) out.J[i] = -ginv * to_matrix(t.omega[i]);
  const Mat4 ij = out.J[0] * out.J[1];
  out.orientation = (ij - out.J[2]).norm() <= (ij + out.J[2]).norm() ? Orientation::Positive : Orientation::Negative;
  return out;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-10) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol && r.determinant() > 0.0;
}

inline FormTriple hyperkahler_rotate(const FormTriple& t, const Mat3& r, double tol = 1e-10) {
  if (!is_rotation(r, tol)) fail(ErrorCode::NotSO3, "rotation matrix is not in SO(3)");
  FormTriple out;
  out.volume = t.volume;
  for (int i = 0; i < 3; ++i) {
    out.omega[i].setZero();
    for (int j = 0; j < 3; ++j) out.omega[i] += r(i, j) * t.omega[j];
  }
  return out;
}

// (L^* w)(X, Y) = w(L X, L Y)
inline TwoForm pullback(const TwoForm& w, const Mat4& l) { return from_matrix(l.transpose() * to_matrix(w) * l); }

inline FormTriple pullback(const FormTriple& t, const Mat4& l) {
  FormTriple out;
  for (int i = 0; i < 3; ++i) out.omega[i] = pullback(t.omega[i], l);
  out.volume = t.volume * l.determinant();
  return out;
}

// 6x6 matrix of the linear map w -> L^* w
inline Mat6 pullback_matrix(const Mat4& l) {
  Mat6 p;
  for (int k = 0; k < 6; ++k) {
    TwoForm e = TwoForm::Zero();
    e[k] = 1.0;
    p.col(k) = pullback(e, l);
  }
  return p;
}

}  // namespace hklab
