#pragma once

// Fixed-point corrector on a flat T^4: turns a closed triple h + d eta
// (h constant self-dual, eta band-limited) into a triple with
// omega~^i ^ omega~^j = 2 delta_ij V in the same cohomology classes.
//
//   phi_{n+1} = -2 * d G Proj_{H+ perp} F(Id - d-phi_n ^ d-phi_n / 2V)
//   omega~    = d phi + Proj_{H+} F(...)
//
// Nonlinear pointwise maps run on a 3/2 zero-padded grid.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/form_algebra.hpp"
#include "hklab/parallel.hpp"
#include "hklab/random.hpp"
#include "hklab/spectral.hpp"

namespace hklab {

using Grid4 = TorusGrid<4>;
using TriForm = std::array<SpectralForm, 3>;

// ---- self-dual bookkeeping for the Euclidean metric in torus coordinates ----

inline const std::array<TwoForm, 3>& flat_sd_basis() {
  static const std::array<TwoForm, 3> b = flat_triple().omega;
  return b;
}

// coefficients s_k with Proj_+ w = sum s_k omega_flat^k
inline Vec3 sd_coefficients(const TwoForm& w) {
  const auto& b = flat_sd_basis();
  return Vec3(w.dot(b[0]) / 2.0, w.dot(b[1]) / 2.0, w.dot(b[2]) / 2.0);
}

inline TwoForm asd_part(const TwoForm& w) { return 0.5 * (w - euclidean_star() * w); }

template <int D>
SpectralForm form_part(const TorusGrid<D>& g, const SpectralForm& w, double sign) {
  SpectralForm s = spectral_star(g, w);
  SpectralForm out = w;
  for (std::size_t i = 0; i < out.c.size(); ++i)
    for (std::size_t m = 0; m < g.size(); ++m) out.c[i][m] = 0.5 * (w.c[i][m] + sign * s.c[i][m]);
  return out;
}

inline SpectralForm self_dual_part(const Grid4& g, const SpectralForm& w) { return form_part(g, w, 1.0); }
inline SpectralForm anti_self_dual_part(const Grid4& g, const SpectralForm& w) { return form_part(g, w, -1.0); }

// ---- Green's operator on self-dual forms ----

inline constexpr double kHarmonicTol = 1e-12;

inline SpectralForm green_selfdual(const Grid4& g, const SpectralForm& psi, double tol = kHarmonicTol) {
  if (psi.degree != 2) fail(ErrorCode::InvalidArgument, "green_selfdual expects a 2-form");
  const double asd = max_abs(anti_self_dual_part(g, psi));
  const double scale = std::max(1.0, max_abs(psi));
  if (asd > 1e-10 * scale) fail(ErrorCode::InvalidArgument, "green_selfdual input is not self-dual");
  for (const auto& comp : psi.c)
    if (std::abs(comp[0]) > tol * scale) fail(ErrorCode::HarmonicComponent, "input has a harmonic (zero mode) component");
  SpectralForm out = psi;
  for (auto& comp : out.c)
    for (std::size_t m = 0; m < g.size(); ++m) comp[m] = g.k2()[m] > 0.0 ? comp[m] / g.k2()[m] : cplx(0.0);
  return out;
}

// ---- pointwise matrix functions ----

inline constexpr double kSpectralLow = 0.5;
inline constexpr double kSpectralHigh = 2.0;

struct SymFunctions {
  Mat3 sqrt;
  Mat3 inv_sqrt;
};

inline SymFunctions sym_sqrt(const Mat3& m, const char* name) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  const Vec3 ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) fail(ErrorCode::NotSPD, std::string(name) + " has a nonpositive eigenvalue");
  if (ev.minCoeff() < kSpectralLow || ev.maxCoeff() > kSpectralHigh)
    fail(ErrorCode::FarFromIdentity, std::string(name) + " spectrum outside [1/2, 2]");
  const Mat3& q = es.eigenvectors();
  return {q * ev.cwiseSqrt().asDiagonal() * q.transpose(), q * ev.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose()};
}

// C = B^{1/2} A^{-1/2}; F^i = C_ij omega^j
inline Mat3 f_map_matrix(const Mat3& a, const Mat3& b) { return sym_sqrt(b, "B").sqrt * sym_sqrt(a, "A").inv_sqrt; }

inline std::array<TwoForm, 3> f_map_point(const std::array<TwoForm, 3>& omega, double volume, const Mat3& b) {
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = wedge(omega[i], omega[j]) / (2.0 * volume);
  const Mat3 c = f_map_matrix(a, b);
  std::array<TwoForm, 3> f;
  for (int i = 0; i < 3; ++i) {
    f[i].setZero();
    for (int j = 0; j < 3; ++j) f[i] += c(i, j) * omega[j];
  }
  return f;
}

// ---- problem setup ----

struct EtaMode {
  int form = 0;       // which omega^i
  int component = 0;  // dx^component, 0..3
  std::array<int, 4> m{1, 0, 0, 0};
  double amplitude = 1e-2;  // coefficient of cos in eta
  double phase = 0.0;
};

struct CorrectorProblem {
  int n = 8;
  Mat4 basis = Mat4::Identity();
  std::array<TwoForm, 3> harmonic = flat_triple().omega;
  std::vector<EtaMode> modes;
  double amplitude = -1.0;  // if positive, rescale eta so that sup |d eta| equals it
};

struct RandomPerturbation {
  std::uint64_t seed = 1;
  int mode_count = 4;
  int max_mode = 1;
};

inline std::vector<EtaMode> random_modes(const RandomPerturbation& rp) {
  Philox rng(rp.seed, 0x6b6c6162u);
  std::vector<EtaMode> out;
  for (int q = 0; q < rp.mode_count; ++q) {
    EtaMode md;
    md.form = rng.uniform_int(0, 2);
    md.component = rng.uniform_int(0, 3);
    do {
      for (auto& v : md.m) v = rng.uniform_int(-rp.max_mode, rp.max_mode);
    } while (md.m == std::array<int, 4>{0, 0, 0, 0});
    md.amplitude = rng.uniform(0.5, 1.0);
    md.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.push_back(md);
  }
  return out;
}

struct CorrectorOptions {
  double tol = 1e-8;
  int max_iter = 200;
  int divergence_window = 3;
  double growth_margin = 1e-6;  // relative increase that counts as growth
};

struct CorrectorState {
  Grid4 grid;
  Grid4 fine;
  std::array<TwoForm, 3> harmonic;
  Mat3 sd_matrix;  // harmonic[i] = sum_k sd_matrix(i,k) omega_flat^k
  Mat3 harmonic_gram;  // h^i ^ h^j
  std::vector<double> volume;  // V on the fine grid
  TriForm eta;
  TriForm phi;
  std::vector<double> residual_history;
  std::vector<double> step_history;
  int iterations = 0;
};

inline SpectralForm one_form_from_modes(const Grid4& g, const std::vector<EtaMode>& modes, int form) {
  SpectralForm eta = zero_form(g, 1);
  for (const EtaMode& md : modes) {
    if (md.form != form) continue;
    for (int a = 0; a < 4; ++a)
      if (std::abs(md.m[a]) > g.band_limit()) fail(ErrorCode::InvalidArgument, "perturbation mode outside the grid band");
    std::array<int, 4> neg = md.m;
    for (auto& v : neg) v = -v;
    // A cos(k.th + p) = (A/2) e^{ip} e^{ik.th} + (A/2) e^{-ip} e^{-ik.th}
    eta.c[md.component][g.slot_of_mode(md.m)] += 0.5 * md.amplitude * std::polar(1.0, md.phase);
    eta.c[md.component][g.slot_of_mode(neg)] += 0.5 * md.amplitude * std::polar(1.0, -md.phase);
  }
  return eta;
}

inline std::vector<double> physical(const Grid4& g, const Spectrum& s) { return g.to_physical(s); }

// physical samples of a coarse-grid form on the fine grid
inline std::vector<std::vector<double>> fine_samples(const Grid4& coarse, const Grid4& fine, const SpectralForm& w) {
  std::vector<std::vector<double>> out(w.c.size());
  for (std::size_t i = 0; i < w.c.size(); ++i) out[i] = fine.to_physical(pad_spectrum(coarse, w.c[i], fine));
  return out;
}

inline double sup_norm_fine(const Grid4& coarse, const Grid4& fine, const SpectralForm& w) {
  double r = 0.0;
  for (const auto& comp : fine_samples(coarse, fine, w))
    for (double v : comp) r = std::max(r, std::abs(v));
  return r;
}

inline int padded_size(int n) {
  int m = (3 * n + 1) / 2;
  return m + (m % 2);
}

inline CorrectorState make_state(const CorrectorProblem& p) {
  CorrectorState st{Grid4(p.n, p.basis), Grid4(padded_size(p.n), p.basis), p.harmonic, Mat3::Zero(), Mat3::Zero(), {}, {}, {}, {}, {}, 0};
  for (int i = 0; i < 3; ++i) {
    if (asd_part(p.harmonic[i]).cwiseAbs().maxCoeff() > 1e-12)
      fail(ErrorCode::InvalidArgument, "harmonic part must be self-dual for the flat metric");
    st.sd_matrix.row(i) = sd_coefficients(p.harmonic[i]).transpose();
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) st.harmonic_gram(i, j) = wedge(p.harmonic[i], p.harmonic[j]);
  const double c = st.harmonic_gram.trace() / 3.0;
  if (!(c > 0.0) || (st.harmonic_gram / c - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-8)
    fail(ErrorCode::IncompatibleTriple, "harmonic classes do not satisfy h^i ^ h^j = 2 delta_ij m");

  for (int i = 0; i < 3; ++i) st.eta[i] = one_form_from_modes(st.grid, p.modes, i);
  if (p.amplitude > 0.0) {
    double sup = 0.0;
    for (int i = 0; i < 3; ++i) sup = std::max(sup, sup_norm_fine(st.grid, st.fine, spectral_d(st.grid, st.eta[i])));
    if (sup == 0.0) fail(ErrorCode::InvalidArgument, "cannot rescale a zero perturbation");
    for (auto& e : st.eta) e = (p.amplitude / sup) * e;
  }
  st.phi = st.eta;

  // V = (1/2) det(omega_in ^ omega_in)^{1/3}, mean matched to the classes
  std::array<std::vector<std::vector<double>>, 3> w;
  for (int i = 0; i < 3; ++i) w[i] = fine_samples(st.grid, st.fine, spectral_d(st.grid, st.eta[i]));
  const std::size_t N = st.fine.size();
  st.volume.assign(N, 0.0);
  for (std::size_t x = 0; x < N; ++x) {
    std::array<TwoForm, 3> om;
    for (int i = 0; i < 3; ++i)
      for (int c6 = 0; c6 < 6; ++c6) om[i][c6] = p.harmonic[i][c6] + w[i][c6][x];
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = wedge(om[i], om[j]);
    const double d = m.determinant();
    if (!(d > 0.0)) fail(ErrorCode::DegenerateGram, "input triple degenerate at a grid point");
    st.volume[x] = 0.5 * std::cbrt(d);
  }
  double mean = 0.0;
  for (double v : st.volume) mean += v;
  mean /= double(N);
  const double target = 0.5 * std::cbrt(st.harmonic_gram.determinant());
  for (double& v : st.volume) v *= target / mean;
  return st;
}

// ---- one evaluation of the nonlinear map at the current phi ----

struct Evaluation {
  std::array<std::array<Spectrum, 3>, 3> f_sd;  // coarse spectra of SD coefficients of F^i (zero mode removed)
  Mat3 harmonic_sd = Mat3::Zero();              // zero modes: Proj_{H+} F^i = sum_k harmonic_sd(i,k) omega^k
  double residual = 0.0;                        // max pointwise |gram(omega~, V) - Id|_F
};

inline Evaluation evaluate(const CorrectorState& st) {
  const Grid4& g = st.grid;
  const Grid4& fg = st.fine;
  const std::size_t N = fg.size();
  std::array<SpectralForm, 3> dphi;
  std::array<std::vector<std::vector<double>>, 3> asd, full;
  for (int i = 0; i < 3; ++i) {
    dphi[i] = spectral_d(g, st.phi[i]);
    asd[i] = fine_samples(g, fg, anti_self_dual_part(g, dphi[i]));
    full[i] = fine_samples(g, fg, dphi[i]);
  }
  const Mat3 a_const = st.harmonic_gram;  // A = H / 2V
  std::array<std::array<std::vector<double>, 3>, 3> fvals;
  for (auto& row : fvals)
    for (auto& v : row) v.assign(N, 0.0);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      std::array<TwoForm, 3> dm;
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 6; ++c) dm[i][c] = asd[i][c][x];
      const double v = st.volume[x];
      Mat3 bm;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) bm(i, j) = (i == j ? 1.0 : 0.0) - wedge(dm[i], dm[j]) / (2.0 * v);
      const Mat3 c = f_map_matrix(a_const / (2.0 * v), bm) * st.sd_matrix;
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) fvals[i][k][x] = c(i, k);
    }
  });

  Evaluation ev;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      const Spectrum s = fg.to_spectrum(fvals[i][k]);
      ev.f_sd[i][k] = truncate_spectrum(fg, s, g);
      ev.harmonic_sd(i, k) = ev.f_sd[i][k][0].real();
      ev.f_sd[i][k][0] = 0.0;
    }

  // residual of omega~ = d phi + Proj_{H+} F
  std::array<TwoForm, 3> harm;
  for (int i = 0; i < 3; ++i) {
    harm[i].setZero();
    for (int k = 0; k < 3; ++k) harm[i] += ev.harmonic_sd(i, k) * flat_sd_basis()[k];
  }
  std::vector<double> worst(N, 0.0);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t x = b; x < e; ++x) {
      std::array<TwoForm, 3> om;
      for (int i = 0; i < 3; ++i) {
        om[i] = harm[i];
        for (int c = 0; c < 6; ++c) om[i][c] += full[i][c][x];
      }
      Mat3 gm;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) gm(i, j) = wedge(om[i], om[j]) / (2.0 * st.volume[x]);
      worst[x] = (gm - Mat3::Identity()).norm();
    }
  });
  for (double w : worst) ev.residual = std::max(ev.residual, w);
  return ev;
}

// phi = -2 * d G psi for psi = sum_k s_k omega_flat^k (zero modes removed)
inline SpectralForm correction_from_sd(const Grid4& g, const std::array<Spectrum, 3>& s) {
  SpectralForm psi = zero_form(g, 2);
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 6; ++c) {
      const double w = flat_sd_basis()[k][c];
      if (w == 0.0) continue;
      for (std::size_t m = 0; m < g.size(); ++m) psi.c[c][m] += w * s[k][m];
    }
  const SpectralForm u = green_selfdual(g, psi);
  return -2.0 * spectral_star(g, spectral_d(g, u));
}

inline double l2_distance(const TriForm& a, const TriForm& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < a[i].c.size(); ++c)
      for (std::size_t m = 0; m < a[i].c[c].size(); ++m) s += std::norm(a[i].c[c][m] - b[i].c[c][m]);
  return std::sqrt(s);
}

// one fixed-point step; returns the evaluation at the incoming phi
inline Evaluation iterate(CorrectorState& st) {
  const Evaluation ev = evaluate(st);
  st.residual_history.push_back(ev.residual);
  TriForm next;
  for (int i = 0; i < 3; ++i) next[i] = correction_from_sd(st.grid, ev.f_sd[i]);
  st.step_history.push_back(l2_distance(next, st.phi));
  st.phi = next;
  ++st.iterations;
  return ev;
}

struct SolveResult {
  TriForm exact_part;              // d phi
  std::array<TwoForm, 3> harmonic; // Proj_{H+} F
  double residual = 0.0;
  int iterations = 0;
  double class_error = 0.0;        // max |zero mode(omega~) - zero mode(omega_in)|
  std::vector<double> residual_history;
  std::vector<double> step_history;
};

inline SolveResult solve(CorrectorState& st, const CorrectorOptions& opt = {}) {
  int rising = 0;
  for (;;) {
    const Evaluation ev = evaluate(st);
    st.residual_history.push_back(ev.residual);
    const std::size_t h = st.residual_history.size();
    if (h >= 2 && st.residual_history[h - 1] > st.residual_history[h - 2] * (1.0 + opt.growth_margin))
      ++rising;
    else
      rising = 0;
    if (ev.residual <= opt.tol) {
      SolveResult r;
      for (int i = 0; i < 3; ++i) {
        r.exact_part[i] = spectral_d(st.grid, st.phi[i]);
        r.harmonic[i].setZero();
        for (int k = 0; k < 3; ++k) r.harmonic[i] += ev.harmonic_sd(i, k) * flat_sd_basis()[k];
        // zero modes of d phi vanish identically; compare them anyway
        TwoForm zm;
        for (int c = 0; c < 6; ++c) zm[c] = r.exact_part[i].c[c][0].real() + r.harmonic[i][c];
        r.class_error = std::max(r.class_error, (zm - st.harmonic[i]).cwiseAbs().maxCoeff());
      }
      r.residual = ev.residual;
      r.iterations = st.iterations;
      r.residual_history = st.residual_history;
      r.step_history = st.step_history;
      return r;
    }
    if (rising >= opt.divergence_window)
      fail(ErrorCode::DivergenceDetected, "residual grew for " + std::to_string(rising) + " consecutive steps");
    if (st.iterations >= opt.max_iter) fail(ErrorCode::MaxIterations, "no convergence within max_iter");
    TriForm next;
    for (int i = 0; i < 3; ++i) next[i] = correction_from_sd(st.grid, ev.f_sd[i]);
    st.step_history.push_back(l2_distance(next, st.phi));
    st.phi = next;
    ++st.iterations;
  }
}

// ---- identities ----

// max_x |F^i ^ F^j - 2 B_ij V| over random SPD B near Id; pointwise check
inline double f_map_identity_residual(const std::array<TwoForm, 3>& omega, double volume, const Mat3& b) {
  const auto f = f_map_point(omega, volume, b);
  double r = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r = std::max(r, std::abs(wedge(f[i], f[j]) - 2.0 * b(i, j) * volume));
  return r;
}

// max |Delta_Hodge(f omega^i) - (Delta f) omega^i| in physical space
inline double laplacian_coefficient_check(const Grid4& g, const Spectrum& f) {
  Spectrum lap(f.size());
  for (std::size_t m = 0; m < g.size(); ++m) lap[m] = g.k2()[m] * f[m];
  double r = 0.0;
  for (int i = 0; i < 3; ++i) {
    SpectralForm w = zero_form(g, 2);
    for (int c = 0; c < 6; ++c)
      for (std::size_t m = 0; m < g.size(); ++m) w.c[c][m] = flat_sd_basis()[i][c] * f[m];
    const SpectralForm lw = hodge_laplacian(g, w);
    for (int c = 0; c < 6; ++c) {
      Spectrum diff(g.size());
      for (std::size_t m = 0; m < g.size(); ++m) diff[m] = lw.c[c][m] - flat_sd_basis()[i][c] * lap[m];
      for (double v : g.to_physical(diff)) r = std::max(r, std::abs(v));
    }
  }
  return r;
}

// ---- inverse of a restricted projection ----

// P = Proj_{W perp} restricted to V perp; P^{-1} f = f - sum a^{ij} (f, v_i) w_j
// with a_ij = (w_i, v_j). Columns of vb, wb are the basis vectors.
inline Eigen::VectorXd proj_inverse(const Eigen::MatrixXd& vb, const Eigen::MatrixXd& wb, const Eigen::VectorXd& f,
                                    double tol = 1e-12) {
  if (vb.cols() != wb.cols() || vb.rows() != wb.rows() || f.size() != vb.rows())
    fail(ErrorCode::InvalidArgument, "proj_inverse: dimension mismatch");
  const Eigen::MatrixXd a = wb.transpose() * vb;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() > 0 && (sv.minCoeff() <= tol * std::max(1.0, sv.maxCoeff())))
    fail(ErrorCode::SingularPairing, "pairing matrix (w_i, v_j) is singular");
  const Eigen::MatrixXd ainv = a.inverse();
  // sum_ij a^{ij} (f, v_i) w_j
  const Eigen::VectorXd fv = vb.transpose() * f;
  return f - wb * (ainv.transpose() * fv);
}

// orthogonal projection onto the complement of span(columns of b)
inline Eigen::VectorXd project_out(const Eigen::MatrixXd& b, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd gram = b.transpose() * b;
  return x - b * gram.ldlt().solve(b.transpose() * x);
}

}  // namespace hklab
