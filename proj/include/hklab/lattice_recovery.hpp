#pragma once

// Cross-section lattice from the nine face periods: f = adj(A),
// A = det(f)^{-1/2} adj(f).

#include <cmath>

#include "hklab/error.hpp"
#include "hklab/flat_models.hpp"

namespace hklab {

// f[i][face], faces ordered (F23, F31, F12)
struct FacePeriods {
  Mat3 f = Mat3::Identity();
};

inline Mat3 adjugate(const Mat3& m) {
  Mat3 adj;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      // cofactor C_ji -> adj_ij
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    }
  return adj;
}

// column alpha of adj(A) is v_beta x v_gamma for cyclic (alpha, beta, gamma)
inline FacePeriods face_periods_of(const Lattice3& l) { return FacePeriods{adjugate(l.basis())}; }

inline Lattice3 recover_basis(const FacePeriods& fp) {
  const double d = fp.f.determinant();
  if (!(d > 0.0)) fail(ErrorCode::NondegeneracyFailure, "face period matrix has det <= 0");
  return Lattice3(adjugate(fp.f) / std::sqrt(d));
}

// condition (1): det f > 0
inline bool face_condition(const FacePeriods& fp) { return fp.f.determinant() > 0.0; }

}  // namespace hklab
