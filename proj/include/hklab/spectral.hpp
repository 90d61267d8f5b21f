#pragma once

// Fourier calculus on flat tori R^D / L. Fields are functions of Euclidean
// coordinates theta = B^T x, x in [0,1)^D, B the basis (rows = periods).
// Coefficients are normalized: f(theta) = sum_m c_m exp(i kappa_m . theta),
// kappa_m = 2 pi B^{-1} m.

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/parallel.hpp"

namespace hklab {

using cplx = std::complex<double>;
using Spectrum = std::vector<cplx>;

namespace detail {

inline fftw_plan cached_plan(int n, int dim, int sign) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(n, dim, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  std::vector<int> dims(dim, n);
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(n);
  fftw_complex* buf = fftw_alloc_complex(total);
  fftw_plan p = fftw_plan_dft(dim, dims.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (!p) fail(ErrorCode::InvalidArgument, "FFTW planning failed");
  plans.emplace(key, p);
  return p;
}

}  // namespace detail

// In-place transforms; forward divides by the number of points.
inline void fft_forward(Spectrum& a, int n, int dim) {
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(detail::cached_plan(n, dim, FFTW_FORWARD), p, p);
  const double s = 1.0 / static_cast<double>(a.size());
  for (auto& v : a) v *= s;
}

inline void fft_backward(Spectrum& a, int n, int dim) {
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(detail::cached_plan(n, dim, FFTW_BACKWARD), p, p);
}

template <int D>
class TorusGrid {
 public:
  using MatD = Eigen::Matrix<double, D, D>;
  using VecD = Eigen::Matrix<double, D, 1>;
  using Index = std::array<int, D>;

  TorusGrid(int n, const MatD& basis) : n_(n), basis_(basis) {
    if (n < 2) fail(ErrorCode::InvalidArgument, "torus grid needs n >= 2");
    if (std::abs(basis.determinant()) < 1e-14) fail(ErrorCode::SingularLattice, "torus basis is singular");
    dual_ = basis.inverse().transpose();
    size_ = 1;
    for (int i = 0; i < D; ++i) size_ *= static_cast<std::size_t>(n);
    for (int i = 0; i < D; ++i) kappa_[i].assign(size_, 0.0);
    k2_.assign(size_, 0.0);
    band_.assign(size_, 1);
    for (std::size_t s = 0; s < size_; ++s) {
      const Index m = modes(s);
      VecD mv;
      bool ok = true;
      for (int a = 0; a < D; ++a) {
        mv[a] = m[a];
        if (std::abs(m[a]) > band_limit()) ok = false;
      }
      band_[s] = ok;
      if (!ok) continue;
      const VecD k = 2.0 * std::numbers::pi * dual_.transpose() * mv;
      for (int i = 0; i < D; ++i) kappa_[i][s] = k[i];
      k2_[s] = k.squaredNorm();
    }
  }

  int n() const { return n_; }
  std::size_t size() const { return size_; }
  const MatD& basis() const { return basis_; }
  const MatD& dual() const { return dual_; }
  double volume() const { return std::abs(basis_.determinant()); }

  // retained modes |m_a| <= K; the Nyquist mode of an even grid is dropped
  int band_limit() const { return (n_ - 1) / 2; }
  bool in_band(std::size_t s) const { return band_[s] != 0; }

  int mode_of(int j) const { return j <= n_ / 2 ? j : j - n_; }

  Index index(std::size_t s) const {
    Index j{};
    for (int a = D - 1; a >= 0; --a) {
      j[a] = static_cast<int>(s % n_);
      s /= n_;
    }
    return j;
  }

  std::size_t slot(const Index& j) const {
    std::size_t s = 0;
    for (int a = 0; a < D; ++a) s = s * n_ + static_cast<std::size_t>(((j[a] % n_) + n_) % n_);
    return s;
  }

  Index modes(std::size_t s) const {
    Index j = index(s);
    for (auto& v : j) v = mode_of(v);
    return j;
  }

  std::size_t slot_of_mode(const Index& m) const { return slot(m); }

  // theta = B^T x at grid point s
  VecD point(std::size_t s) const {
    const Index j = index(s);
    VecD x;
    for (int a = 0; a < D; ++a) x[a] = static_cast<double>(j[a]) / n_;
    return basis_.transpose() * x;
  }

  // kappa_i(slot); zero outside the band
  const std::vector<double>& kappa(int i) const { return kappa_[i]; }
  const std::vector<double>& k2() const { return k2_; }

  VecD wavevector(const Index& m) const {
    VecD mv;
    for (int a = 0; a < D; ++a) mv[a] = m[a];
    return 2.0 * std::numbers::pi * dual_.transpose() * mv;
  }

  Spectrum to_spectrum(const std::vector<double>& values) const {
    Spectrum a(values.begin(), values.end());
    fft_forward(a, n_, D);
    return a;
  }

  std::vector<double> to_physical(Spectrum a) const {
    fft_backward(a, n_, D);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].real();
    return v;
  }

  // zeroes everything outside the band; returns the largest dropped magnitude
  double band_limit_in_place(Spectrum& a) const {
    double dropped = 0.0;
    for (std::size_t s = 0; s < size_; ++s)
      if (!band_[s]) {
        dropped = std::max(dropped, std::abs(a[s]));
        a[s] = 0.0;
      }
    return dropped;
  }

 private:
  int n_;
  MatD basis_;
  MatD dual_;
  std::size_t size_ = 0;
  std::array<std::vector<double>, D> kappa_;
  std::vector<double> k2_;
  std::vector<char> band_;
};

// Copies retained modes of `small` onto the zero-padded grid `large` (same basis).
template <int D>
Spectrum pad_spectrum(const TorusGrid<D>& small, const Spectrum& a, const TorusGrid<D>& large) {
  Spectrum out(large.size(), cplx(0.0));
  for (std::size_t s = 0; s < small.size(); ++s)
    if (small.in_band(s)) out[large.slot_of_mode(small.modes(s))] = a[s];
  return out;
}

template <int D>
Spectrum truncate_spectrum(const TorusGrid<D>& large, const Spectrum& a, const TorusGrid<D>& small) {
  Spectrum out(small.size(), cplx(0.0));
  for (std::size_t s = 0; s < small.size(); ++s)
    if (small.in_band(s)) out[s] = a[large.slot_of_mode(small.modes(s))];
  return out;
}

// ---- exterior algebra on R^D with Euclidean coordinates ----

template <int D>
const std::vector<std::vector<int>>& form_basis(int p) {
  static const std::array<std::vector<std::vector<int>>, D + 1> all = [] {
    std::array<std::vector<std::vector<int>>, D + 1> b;
    for (int mask = 0; mask < (1 << D); ++mask) {
      std::vector<int> idx;
      for (int i = 0; i < D; ++i)
        if (mask & (1 << i)) idx.push_back(i);
      b[idx.size()].push_back(idx);
    }
    for (auto& v : b) std::sort(v.begin(), v.end());
    return b;
  }();
  return all.at(p);
}

template <int D>
int form_index(int p, const std::vector<int>& sorted) {
  const auto& b = form_basis<D>(p);
  const auto it = std::lower_bound(b.begin(), b.end(), sorted);
  if (it == b.end() || *it != sorted) return -1;
  return static_cast<int>(it - b.begin());
}

inline int permutation_sign(std::vector<int> p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) s = -s;
  return s;
}

struct SpectralForm {
  int degree = 0;
  std::vector<Spectrum> c;  // one spectrum per basis element of degree-forms
};

template <int D>
SpectralForm zero_form(const TorusGrid<D>& g, int p) {
  return SpectralForm{p, std::vector<Spectrum>(form_basis<D>(p).size(), Spectrum(g.size(), cplx(0.0)))};
}

template <int D>
SpectralForm spectral_d(const TorusGrid<D>& g, const SpectralForm& a) {
  const int p = a.degree;
  if (p >= D) return SpectralForm{p + 1, {}};  // above top degree: no components
  SpectralForm out = zero_form(g, p + 1);
  const auto& bj = form_basis<D>(p + 1);
  for (std::size_t J = 0; J < bj.size(); ++J) {
    for (int s = 0; s <= p; ++s) {
      std::vector<int> k = bj[J];
      const int dir = k[s];
      k.erase(k.begin() + s);
      const int K = form_index<D>(p, k);
      const double sign = (s % 2 == 0) ? 1.0 : -1.0;
      const auto& kap = g.kappa(dir);
      Spectrum& dst = out.c[J];
      const Spectrum& src = a.c[K];
      for (std::size_t m = 0; m < g.size(); ++m) dst[m] += sign * cplx(0.0, kap[m]) * src[m];
    }
  }
  return out;
}

template <int D>
SpectralForm spectral_star(const TorusGrid<D>& g, const SpectralForm& a) {
  const int p = a.degree;
  SpectralForm out = zero_form(g, D - p);
  const auto& bi = form_basis<D>(p);
  for (std::size_t I = 0; I < bi.size(); ++I) {
    std::vector<int> comp;
    for (int i = 0; i < D; ++i)
      if (std::find(bi[I].begin(), bi[I].end(), i) == bi[I].end()) comp.push_back(i);
    std::vector<int> perm = bi[I];
    perm.insert(perm.end(), comp.begin(), comp.end());
    const double sign = permutation_sign(perm);
    const int C = form_index<D>(D - p, comp);
    for (std::size_t m = 0; m < g.size(); ++m) out.c[C][m] = sign * a.c[I][m];
  }
  return out;
}

// d* = (-1)^{D(p+1)+1} * d * on p-forms
template <int D>
SpectralForm spectral_dstar(const TorusGrid<D>& g, const SpectralForm& a) {
  const int p = a.degree;
  if (p == 0) return zero_form(g, 0);
  if (p > D) return zero_form(g, D);
  SpectralForm out = spectral_star(g, spectral_d(g, spectral_star(g, a)));
  out.degree = p - 1;
  const double sign = ((D * (p + 1) + 1) % 2 == 0) ? 1.0 : -1.0;
  for (auto& comp : out.c)
    for (auto& v : comp) v *= sign;
  return out;
}

template <int D>
SpectralForm hodge_laplacian(const TorusGrid<D>& g, const SpectralForm& a) {
  SpectralForm x = spectral_dstar(g, spectral_d(g, a));
  if (a.degree > 0) {
    const SpectralForm y = spectral_d(g, spectral_dstar(g, a));
    for (std::size_t i = 0; i < x.c.size(); ++i)
      for (std::size_t m = 0; m < g.size(); ++m) x.c[i][m] += y.c[i][m];
  }
  return x;
}

// L2 inner product divided by the torus volume (Parseval)
inline cplx form_inner(const SpectralForm& a, const SpectralForm& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t m = 0; m < a.c[i].size(); ++m) s += std::conj(a.c[i][m]) * b.c[i][m];
  return s;
}

inline double max_abs(const SpectralForm& a) {
  double r = 0.0;
  for (const auto& comp : a.c)
    for (const auto& v : comp) r = std::max(r, std::abs(v));
  return r;
}

inline SpectralForm operator+(SpectralForm a, const SpectralForm& b) {
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t m = 0; m < a.c[i].size(); ++m) a.c[i][m] += b.c[i][m];
  return a;
}

inline SpectralForm operator-(SpectralForm a, const SpectralForm& b) {
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t m = 0; m < a.c[i].size(); ++m) a.c[i][m] -= b.c[i][m];
  return a;
}

inline SpectralForm operator*(double s, SpectralForm a) {
  for (auto& comp : a.c)
    for (auto& v : comp) v *= s;
  return a;
}

}  // namespace hklab
