#pragma once

// Homology and period algebra for the doubled K3 (16 curves, 3 faces F_{bc},
// 3 long faces F_a) and the ALH end (8 curves, 3 faces).
//
// Classes are stored with doubled integer coefficients:
//   x = (1/2)(sum m_a Sigma_a + sum n_a F_{bc} + sum l_a F_a),
// faces indexed by a with (a, b, c) cyclic, so F_{bc} <-> a.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/flat_models.hpp"
#include "hklab/lattice_recovery.hpp"

namespace hklab {

enum class BasisKind { K3, ALH };

inline constexpr double kCurveSquare = -2.0;
// F_a . F_{bc} for cyclic (a, b, c). The only place the face pairing is fixed.
inline constexpr double kFacePairing = 2.0;

struct HomologyBasis {
  BasisKind kind = BasisKind::K3;

  int curves() const { return kind == BasisKind::K3 ? 16 : 8; }
  int longs() const { return kind == BasisKind::K3 ? 3 : 0; }
  int rank() const { return curves() + 3 + longs(); }
  int face_offset() const { return curves(); }
  int long_offset() const { return curves() + 3; }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (int a = 1; a <= curves(); ++a) out.push_back("Sigma_" + std::to_string(a));
    for (const char* f : {"F_23", "F_31", "F_12"}) out.push_back(f);
    if (longs() > 0)
      for (const char* f : {"F_1", "F_2", "F_3"}) out.push_back(f);
    return out;
  }

  Eigen::MatrixXd pairing() const {
    const int n = rank();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < curves(); ++a) q(a, a) = kCurveSquare;
    for (int a = 0; a < longs(); ++a) {
      q(long_offset() + a, face_offset() + a) = kFacePairing;
      q(face_offset() + a, long_offset() + a) = kFacePairing;
    }
    return q;
  }
};

inline HomologyBasis k3_basis() { return {BasisKind::K3}; }
inline HomologyBasis alh_basis() { return {BasisKind::ALH}; }

// Periods of a triple: c(i, a) = int_{Sigma_a} omega^i, f_faces(i, a) over F_{bc},
// f_long(i, a) over F_a.
struct PeriodVector {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 16);
  Mat3 f_faces = Mat3::Zero();
  Mat3 f_long = Mat3::Zero();
  double V = 0.0;
};

// 22-vector (or 11-vector) of periods of omega^i over the basis
inline Eigen::VectorXd period_row(const HomologyBasis& b, const PeriodVector& pv, int i) {
  if (pv.c.rows() != 3 || pv.c.cols() != b.curves())
    fail(ErrorCode::InvalidArgument, "curve periods do not match the basis");
  Eigen::VectorXd p(b.rank());
  p.head(b.curves()) = pv.c.row(i).transpose();
  p.segment(b.face_offset(), 3) = pv.f_faces.row(i).transpose();
  if (b.longs() > 0) p.segment(b.long_offset(), 3) = pv.f_long.row(i).transpose();
  return p;
}

// -1/2 sum_a c_ia c_ja + 1/2 sum_a (f_ia f_j,bc + f_ja f_i,bc) - 2 delta_ij V
inline Mat3 check_integrability(const PeriodVector& pv) {
  const Eigen::MatrixXd cc = pv.c * pv.c.transpose();
  const Mat3 cross = pv.f_long * pv.f_faces.transpose();
  return -0.5 * Mat3(cc) + 0.5 * (cross + cross.transpose()) - 2.0 * pv.V * Mat3::Identity();
}

// ---- the rank-5 system for the long-face periods ----

// orthonormal coordinates on 3x3 matrices: vec(M) column-major
inline Eigen::Matrix<double, 9, 1> vec9(const Mat3& m) { return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(m.data()); }
inline Mat3 unvec9(const Eigen::Matrix<double, 9, 1>& v) { return Eigen::Map<const Mat3>(v.data()); }

inline Mat3 sym_part(const Mat3& m) { return 0.5 * (m + m.transpose()); }
inline Mat3 trace_free(const Mat3& m) { return m - (m.trace() / 3.0) * Mat3::Identity(); }

using Mat9 = Eigen::Matrix<double, 9, 9>;

// L -> sym(L F^T), the left side of the integrability identity in L
inline Mat9 integrability_operator(const Mat3& f_faces) {
  Mat9 m;
  for (int k = 0; k < 9; ++k) {
    Eigen::Matrix<double, 9, 1> e = Eigen::Matrix<double, 9, 1>::Zero();
    e[k] = 1.0;
    m.col(k) = vec9(sym_part(unvec9(e) * f_faces.transpose()));
  }
  return m;
}

// L -> tracefree sym(L F^T); the system with V left free
inline Mat9 rank5_operator(const Mat3& f_faces) {
  Mat9 m;
  for (int k = 0; k < 9; ++k) {
    Eigen::Matrix<double, 9, 1> e = Eigen::Matrix<double, 9, 1>::Zero();
    e[k] = 1.0;
    m.col(k) = vec9(trace_free(sym_part(unvec9(e) * f_faces.transpose())));
  }
  return m;
}

inline constexpr double kRankThreshold = 1e-9;

struct Rank5Solution {
  int rank = 0;
  Eigen::Matrix<double, 9, 1> singular_values;
  Mat3 particular = Mat3::Zero();  // also matches the given V
  std::array<Mat3, 4> kernel{};    // orthonormal in the Frobenius inner product
  double residual = 0.0;           // max |check_integrability| at the particular solution
};

inline int numerical_rank(const Eigen::Matrix<double, 9, 1>& sv, double threshold = kRankThreshold) {
  int r = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv[k] > threshold * sv[0]) ++r;
  return r;
}

inline Rank5Solution solve_rank5(const Eigen::MatrixXd& c, const Mat3& f_faces, double V) {
  if (c.rows() != 3) fail(ErrorCode::InvalidArgument, "curve periods must have three rows");
  const double scale = std::max(1e-300, f_faces.rowwise().norm().prod());
  if (!(std::abs(f_faces.determinant()) > 1e-12 * scale))
    fail(ErrorCode::RankDeficient, "face periods are singular");

  Rank5Solution out;
  Eigen::JacobiSVD<Mat9> svd(rank5_operator(f_faces), Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  out.rank = numerical_rank(out.singular_values);
  if (out.rank != 5) fail(ErrorCode::RankDeficient, "system rank is " + std::to_string(out.rank) + ", expected 5");
  for (int k = 0; k < 4; ++k) out.kernel[k] = unvec9(svd.matrixV().col(5 + k));

  // minimum-norm solution of sym(L F^T) = 2 V Id + (1/2) c c^T
  const Mat3 rhs = 2.0 * V * Mat3::Identity() + 0.5 * Mat3(c * c.transpose());
  Eigen::CompleteOrthogonalDecomposition<Mat9> cod(integrability_operator(f_faces));
  out.particular = unvec9(cod.solve(vec9(rhs)));

  PeriodVector pv;
  pv.c = c;
  pv.f_faces = f_faces;
  pv.f_long = out.particular;
  pv.V = V;
  out.residual = check_integrability(pv).cwiseAbs().maxCoeff();
  return out;
}

// V for which (c, f_faces, f_long) satisfies the identity, assuming the
// trace-free part already vanishes
inline double implied_volume(const Eigen::MatrixXd& c, const Mat3& f_faces, const Mat3& f_long) {
  const Mat3 s = sym_part(f_long * f_faces.transpose()) - 0.5 * Mat3(c * c.transpose());
  return s.trace() / 6.0;
}

// ---- gluing-parameter map ----

// f(i, a) = 4 drho (v_a)_i + 2 (dTheta x v_a)_i
inline Mat3 L_map(const Lattice3& lattice, double drho, const Vec3& dtheta) {
  Mat3 f;
  for (int a = 0; a < 3; ++a) f.col(a) = 4.0 * drho * lattice.vector(a) + 2.0 * dtheta.cross(lattice.vector(a));
  return f;
}

// columns: images of (drho, dTheta) = e_0..e_3, vectorized
inline Eigen::Matrix<double, 9, 4> L_map_jacobian(const Lattice3& lattice) {
  Eigen::Matrix<double, 9, 4> j;
  j.col(0) = vec9(L_map(lattice, 1.0, Vec3::Zero()));
  for (int k = 0; k < 3; ++k) j.col(k + 1) = vec9(L_map(lattice, 0.0, Vec3::Unit(k)));
  return j;
}

inline int L_map_image_dimension(const Lattice3& lattice, double threshold = kRankThreshold) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 4>> svd(L_map_jacobian(lattice));
  const auto sv = svd.singularValues();
  int r = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv[k] > threshold * sv[0]) ++r;
  return r;
}

// f lies in {f : f = C (v_1 v_2 v_3), C = s Id + antisymmetric}; returns C when it does
inline std::optional<Mat3> L_map_membership(const Lattice3& lattice, const Mat3& f, double tol = 1e-10) {
  Mat3 vm;
  for (int a = 0; a < 3; ++a) vm.col(a) = lattice.vector(a);
  const Mat3 cm = f * vm.inverse();
  const double scale = std::max(1.0, cm.cwiseAbs().maxCoeff());
  if (trace_free(sym_part(cm)).cwiseAbs().maxCoeff() > tol * scale) return std::nullopt;
  return cm;
}

// ---- -2 classes ----

struct HalfIntegralClass {
  std::vector<int> m;      // curve coefficients, doubled
  std::array<int, 3> n{};  // F_{bc} coefficients, doubled
  std::array<int, 3> l{};  // F_a coefficients, doubled (K3 only)
  std::string tag = "parity-unverified";

  bool operator==(const HalfIntegralClass& o) const { return m == o.m && n == o.n && l == o.l; }
};

// [x]^2 = -(1/2) sum m^2 + n . l (exact for doubled coefficients)
inline double self_intersection(const HalfIntegralClass& x) {
  long s = 0;
  for (int v : x.m) s += long(v) * v;
  long nl = 0;
  for (int a = 0; a < 3; ++a) nl += long(x.n[a]) * x.l[a];
  return -0.5 * double(s) + double(nl) * (kFacePairing / 2.0);
}

inline Eigen::VectorXd coefficient_vector(const HomologyBasis& b, const HalfIntegralClass& x) {
  if (int(x.m.size()) != b.curves()) fail(ErrorCode::InvalidArgument, "class does not match the basis");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(b.rank());
  for (int a = 0; a < b.curves(); ++a) v[a] = 0.5 * x.m[a];
  for (int a = 0; a < 3; ++a) v[b.face_offset() + a] = 0.5 * x.n[a];
  if (b.longs() > 0)
    for (int a = 0; a < 3; ++a) v[b.long_offset() + a] = 0.5 * x.l[a];
  return v;
}

inline std::string class_name(const HomologyBasis& b, const HalfIntegralClass& x) {
  const auto labels = b.labels();
  int nonzero = 0, single = -1;
  for (int a = 0; a < int(x.m.size()); ++a)
    if (x.m[a] != 0) ++nonzero, single = a;
  const bool faces_zero = x.n == std::array<int, 3>{} && x.l == std::array<int, 3>{};
  if (faces_zero && nonzero == 1 && std::abs(x.m[single]) == 2)
    return (x.m[single] < 0 ? "-" : "") + labels[single];
  std::ostringstream os;
  os << "1/2(";
  bool first = true;
  auto term = [&](int coeff, const std::string& label) {
    if (coeff == 0) return;
    if (!first) os << (coeff < 0 ? " - " : " + ");
    else if (coeff < 0) os << "-";
    os << std::abs(coeff) << " " << label;
    first = false;
  };
  for (int a = 0; a < int(x.m.size()); ++a) term(x.m[a], labels[a]);
  for (int a = 0; a < 3; ++a) term(x.n[a], labels[b.face_offset() + a]);
  if (b.longs() > 0)
    for (int a = 0; a < 3; ++a) term(x.l[a], labels[b.long_offset() + a]);
  if (first) os << "0";
  os << ")";
  return os.str();
}

namespace detail {

// all m in Z^len with sum m^2 == target, lexicographic from the most negative
template <class Fn>
void for_each_sum_of_squares(std::vector<int>& m, int depth, int remaining, Fn& fn) {
  const int len = int(m.size());
  if (depth == len) {
    if (remaining == 0) fn();
    return;
  }
  if (remaining == 0) {
    for (int k = depth; k < len; ++k) m[k] = 0;
    fn();
    return;
  }
  if (depth == len - 1) {
    const int r = int(std::lround(std::sqrt(double(remaining))));
    if (r * r != remaining) return;
    m[depth] = -r;
    fn();
    m[depth] = r;
    fn();
    m[depth] = 0;
    return;
  }
  const int bound = int(std::floor(std::sqrt(double(remaining)) + 1e-9));
  for (int v = -bound; v <= bound; ++v) {
    m[depth] = v;
    for_each_sum_of_squares(m, depth + 1, remaining - v * v, fn);
  }
  m[depth] = 0;
}

inline bool next_box(std::array<int, 3>& v, int bound) {
  for (int k = 2; k >= 0; --k) {
    if (v[k] < bound) {
      ++v[k];
      return true;
    }
    v[k] = -bound;
  }
  return false;
}

}  // namespace detail

// Visits every class with [x]^2 = -2 and face coefficients in [-face_bound, face_bound].
// The class object is reused between calls.
template <class Fn>
void for_each_minus2(const HomologyBasis& b, int face_bound, Fn&& fn) {
  if (face_bound < 0) fail(ErrorCode::InvalidArgument, "face_bound must be nonnegative");
  HalfIntegralClass x;
  x.m.assign(b.curves(), 0);
  std::array<int, 3> n{-face_bound, -face_bound, -face_bound};
  do {
    std::array<int, 3> l{};
    if (b.longs() > 0) l = {-face_bound, -face_bound, -face_bound};
    do {
      x.n = n;
      x.l = l;
      const int nl = n[0] * l[0] + n[1] * l[1] + n[2] * l[2];
      // sum m^2 = 4 + 2 n.l under the doubled convention (face pairing 2)
      const int target = 4 + int(kFacePairing) * nl;
      if (target >= 0) {
        auto visit = [&] { fn(static_cast<const HalfIntegralClass&>(x)); };
        detail::for_each_sum_of_squares(x.m, 0, target, visit);
      }
    } while (b.longs() > 0 && detail::next_box(l, face_bound));
  } while (detail::next_box(n, face_bound));
}

inline std::uint64_t count_minus2(const HomologyBasis& b, int face_bound) {
  std::uint64_t count = 0;
  for_each_minus2(b, face_bound, [&](const HalfIntegralClass&) { ++count; });
  return count;
}

inline constexpr std::size_t kDefaultMaxClasses = 5'000'000;

inline std::vector<HalfIntegralClass> enumerate_minus2(const HomologyBasis& b, int face_bound,
                                                       std::size_t max_results = kDefaultMaxClasses) {
  std::vector<HalfIntegralClass> out;
  for_each_minus2(b, face_bound, [&](const HalfIntegralClass& x) {
    if (out.size() == max_results)
      fail(ErrorCode::InvalidArgument, "more than " + std::to_string(max_results) + " classes; use for_each_minus2");
    out.push_back(x);
  });
  return out;
}

// inclusion of the ALH lattice into the K3 lattice: first eight curves, same faces
inline HalfIntegralClass include_alh_in_k3(const HalfIntegralClass& x) {
  HalfIntegralClass y = x;
  y.m.resize(16, 0);
  y.l = {};
  return y;
}

// ---- nondegeneracy ----

// [alpha^i](x) for the three forms
inline Vec3 class_pairing(const PeriodVector& pv, const HalfIntegralClass& x) {
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int a = 0; a < int(x.m.size()); ++a) s += x.m[a] * pv.c(i, a);
    for (int a = 0; a < 3; ++a) s += x.n[a] * pv.f_faces(i, a) + x.l[a] * pv.f_long(i, a);
    p[i] = 0.5 * s;
  }
  return p;
}

inline constexpr double kNondegeneracyTol = 1e-12;
inline constexpr std::size_t kMaxListedViolations = 1000;

struct NondegeneracyReport {
  bool face_condition = false;  // det f_faces > 0
  std::uint64_t checked = 0;
  double min_pairing = 0.0;     // min over classes of max_i |[alpha^i](x)|
  std::uint64_t violation_count = 0;
  std::vector<std::string> violations;  // first kMaxListedViolations names
  bool passed() const { return face_condition && violation_count == 0; }
};

class NondegeneracyChecker {
 public:
  NondegeneracyChecker(HomologyBasis b, PeriodVector pv, double tol = kNondegeneracyTol)
      : b_(b), pv_(std::move(pv)), tol_(tol) {
    report_.face_condition = hklab::face_condition(FacePeriods{pv_.f_faces});
    report_.min_pairing = std::numeric_limits<double>::infinity();
  }

  void operator()(const HalfIntegralClass& x) {
    ++report_.checked;
    const double p = class_pairing(pv_, x).cwiseAbs().maxCoeff();
    report_.min_pairing = std::min(report_.min_pairing, p);
    if (p > tol_) return;
    ++report_.violation_count;
    if (report_.violations.size() < kMaxListedViolations) report_.violations.push_back(class_name(b_, x));
  }

  const NondegeneracyReport& report() const { return report_; }

 private:
  HomologyBasis b_;
  PeriodVector pv_;
  double tol_;
  NondegeneracyReport report_;
};

inline NondegeneracyReport check_nondegeneracy(const HomologyBasis& b, const PeriodVector& pv,
                                               const std::vector<HalfIntegralClass>& classes,
                                               double tol = kNondegeneracyTol) {
  NondegeneracyChecker chk(b, pv, tol);
  for (const auto& x : classes) chk(x);
  return chk.report();
}

inline NondegeneracyReport check_nondegeneracy(const HomologyBasis& b, const PeriodVector& pv, int face_bound,
                                               double tol = kNondegeneracyTol) {
  NondegeneracyChecker chk(b, pv, tol);
  for_each_minus2(b, face_bound, [&](const HalfIntegralClass& x) { chk(x); });
  return chk.report();
}

}  // namespace hklab
