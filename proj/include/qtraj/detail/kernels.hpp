// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Matrix-type-generic right-hand sides of the hierarchy and filter
// equations. Instantiated with Eigen::MatrixXcd for the public API and with
// fixed-size matrices for the ensemble fast path, so both share one
// implementation of the algebra.
//
// Block conventions
//   photon: blocks indexed 0 = vacuum, 1 = photon; varpi^{jk}(X) = tr{rho^{jk dag} X}
//   cat:    blocks indexed 0..n-1;                varpi^{jk}(X) = tr{rho^{jk} X}

#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qtraj::detail {

using Complex = std::complex<double>;

/// Products of S, L, H that every right-hand side needs, computed once.
template <class Mat>
struct SystemCache {
  Mat S, Sd, L, Ld, H, LdL, LdS, SdL, LpLd, I;
  // -iH - L^dag L / 2 and its adjoint
  Mat Keff, Keffd;

  SystemCache() = default;

  template <class In>
  SystemCache(const In& s, const In& l, const In& h) {
    reset(s, l, h);
  }

  template <class In>
  void reset(const In& s, const In& l, const In& h) {
    S = s;
    L = l;
    H = h;
    Sd = S.adjoint();
    Ld = L.adjoint();
    LdL = Ld * L;
    LdS = Ld * S;
    SdL = Sd * L;
    LpLd = L + Ld;
    I = Mat::Identity(S.rows(), S.cols());
    effective();
  }

  // Time-dependent L, H with fixed S.
  template <class In>
  void reset_coupling(const In& l, const In& h) {
    L = l;
    H = h;
    Ld = L.adjoint();
    LdL = Ld * L;
    LdS = Ld * S;
    SdL = Sd * L;
    LpLd = L + Ld;
    effective();
  }

 private:
  void effective() {
    Keff = Complex(0.0, -1.0) * H - 0.5 * LdL;
    Keffd = Keff.adjoint();
  }
};

/// tr{AB} without forming the product.
template <class A, class B>
inline Complex tr_prod(const A& a, const B& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

/// -i[H, rho] + L rho L^dag - (L^dag L rho + rho L^dag L)/2
template <class Mat>
inline Mat liouvillian(const SystemCache<Mat>& c, const Mat& rho) {
  Mat out = c.Keff * rho;
  out.noalias() += rho * c.Keffd;
  const Mat lr = c.L * rho;
  out.noalias() += lr * c.Ld;
  return out;
}

/// [A, B] = AB - BA
template <class Mat>
inline Mat commutator(const Mat& a, const Mat& b) {
  return a * b - b * a;
}

// ---------------------------------------------------------------------------
// Photon hierarchy

/// Drift of the four photon blocks; `in`/`out` are indexed 2*j + k.
template <class Mat>
inline void photon_drift(const SystemCache<Mat>& c, Complex xi, std::span<const Mat, 4> in,
                         std::span<Mat, 4> out) {
  const Complex xc = std::conj(xi);
  const double xi2 = std::norm(xi);
  const Mat& r00 = in[0];
  const Mat& r01 = in[1];
  const Mat& r10 = in[2];
  const Mat& r11 = in[3];
  const Mat s_r00 = c.S * r00;
  const Mat r00_sd = r00 * c.Sd;
  out[0] = liouvillian(c, r00);
  out[1] = liouvillian(c, r01) + xc * commutator<Mat>(c.L, r00_sd);
  out[2] = liouvillian(c, r10) + xi * commutator<Mat>(s_r00, c.Ld);
  out[3] = liouvillian(c, r11) + xi * commutator<Mat>(Mat(c.S * r01), c.Ld) +
           xc * commutator<Mat>(c.L, Mat(r10 * c.Sd)) + xi2 * (s_r00 * c.Sd - r00);
}

/// Homodyne innovation rate K_t = tr{(L+L^dag) rho11} + tr{S rho01} xi + tr{S^dag rho10} xi*.
template <class Mat>
inline double photon_homodyne_rate(const SystemCache<Mat>& c, Complex xi,
                                   std::span<const Mat, 4> r) {
  const Complex k = tr_prod(c.LpLd, r[3]) + tr_prod(c.S, r[1]) * xi +
                    tr_prod(c.Sd, r[2]) * std::conj(xi);
  return k.real();
}

/// Homodyne diffusion coefficients of the four photon blocks given K_t.
template <class Mat>
inline void photon_homodyne_diffusion(const SystemCache<Mat>& c, Complex xi, double rate,
                                      std::span<const Mat, 4> r, std::span<Mat, 4> out) {
  const Complex xc = std::conj(xi);
  auto base = [&](const Mat& m) -> Mat { return c.L * m + m * c.Ld - rate * m; };
  out[0] = base(r[0]);
  out[1] = base(r[1]) + xc * (r[0] * c.Sd);
  out[2] = base(r[2]) + xi * (c.S * r[0]);
  out[3] = base(r[3]) + xc * (r[2] * c.Sd) + xi * (c.S * r[1]);
}

/// Counting intensity nu_t = tr{rho11 L^dag L} + tr{rho10 S^dag L} xi* + tr{rho01 L^dag S} xi
///                          + tr{rho00} |xi|^2.
template <class Mat>
inline double photon_counting_intensity(const SystemCache<Mat>& c, Complex xi,
                                        std::span<const Mat, 4> r) {
  const Complex nu = tr_prod(r[3], c.LdL) + tr_prod(r[2], c.SdL) * std::conj(xi) +
                     tr_prod(r[1], c.LdS) * xi + r[0].trace() * std::norm(xi);
  return nu.real();
}

/// Numerators of the photon jump maps (the operators divided by nu_t).
template <class Mat>
inline void photon_jump_numerators(const SystemCache<Mat>& c, Complex xi, std::span<const Mat, 4> r,
                                   std::span<Mat, 4> out) {
  const Complex xc = std::conj(xi);
  const Mat l_r00 = c.L * r[0];
  const Mat s_r00 = c.S * r[0];
  out[0] = l_r00 * c.Ld;
  out[1] = c.L * r[1] * c.Ld + xc * (l_r00 * c.Sd);
  out[2] = c.L * r[2] * c.Ld + xi * (s_r00 * c.Ld);
  out[3] = c.L * r[3] * c.Ld + xc * (c.L * r[2] * c.Sd) + xi * (c.S * r[1] * c.Ld) +
           std::norm(xi) * (s_r00 * c.Sd);
}

// ---------------------------------------------------------------------------
// Cat hierarchy. `alpha` holds the amplitudes alpha_j(t) at the current time.

/// Drift of block (j, k): L* rho + [S rho, L^dag] alpha_k + [L, rho S^dag] alpha_j*
///                        + (S rho S^dag - rho) alpha_j* alpha_k.
template <class Mat>
inline Mat cat_drift(const SystemCache<Mat>& c, Complex alpha_j, Complex alpha_k, const Mat& rho) {
  const Complex aj_c = std::conj(alpha_j);
  const Mat s_rho = c.S * rho;
  const Mat rho_sd = rho * c.Sd;
  Mat out = liouvillian(c, rho);
  out.noalias() += alpha_k * (s_rho * c.Ld - c.Ld * s_rho);
  out.noalias() += aj_c * (c.L * rho_sd - rho_sd * c.L);
  out.noalias() += (aj_c * alpha_k) * (s_rho * c.Sd - rho);
  return out;
}

/// Weighted homodyne innovation rate sum_l (gamma_ll/N_a) tr{(L + L^dag + S a_l + S^dag a_l*)
/// rho^ll}.
template <class Mat>
inline double cat_homodyne_rate(const SystemCache<Mat>& c, std::span<const Complex> alpha,
                                std::span<const double> diag_weights, std::span<const Mat> blocks) {
  const std::size_t n = alpha.size();
  Complex k{0.0, 0.0};
  for (std::size_t l = 0; l < n; ++l) {
    if (diag_weights[l] == 0.0) continue;
    const Mat& r = blocks[l * n + l];
    const Complex t = tr_prod(c.LpLd, r) + alpha[l] * tr_prod(c.S, r) +
                      std::conj(alpha[l]) * tr_prod(c.Sd, r);
    k += diag_weights[l] * t;
  }
  return k.real();
}

/// Homodyne diffusion of block (j, k): (L + S a_k) rho + rho (L^dag + S^dag a_j*) - K rho.
template <class Mat>
inline Mat cat_homodyne_diffusion(const SystemCache<Mat>& c, Complex alpha_j, Complex alpha_k,
                                  double rate, const Mat& rho) {
  Mat out = c.L * rho + rho * c.Ld - rate * rho;
  out.noalias() += alpha_k * (c.S * rho);
  out.noalias() += std::conj(alpha_j) * (rho * c.Sd);
  return out;
}

/// Counting normalization N = sum_l (gamma_ll/N_a) tr{rho^ll (L^dag L + a_l L^dag S + a_l* S^dag L
/// + |a_l|^2)}.
template <class Mat>
inline double cat_counting_intensity(const SystemCache<Mat>& c, std::span<const Complex> alpha,
                                     std::span<const double> diag_weights,
                                     std::span<const Mat> blocks) {
  const std::size_t n = alpha.size();
  Complex nu{0.0, 0.0};
  for (std::size_t l = 0; l < n; ++l) {
    if (diag_weights[l] == 0.0) continue;
    const Mat& r = blocks[l * n + l];
    const Complex t = tr_prod(r, c.LdL) + alpha[l] * tr_prod(r, c.LdS) +
                      std::conj(alpha[l]) * tr_prod(r, c.SdL) + std::norm(alpha[l]) * r.trace();
    nu += diag_weights[l] * t;
  }
  return nu.real();
}

/// Jump numerator of block (j, k): L rho L^dag + a_k S rho L^dag + a_j* L rho S^dag
///                                + a_j* a_k S rho S^dag.
template <class Mat>
inline Mat cat_jump_numerator(const SystemCache<Mat>& c, Complex alpha_j, Complex alpha_k,
                              const Mat& rho) {
  const Mat l_rho = c.L * rho;
  const Mat s_rho = c.S * rho;
  const Complex aj_c = std::conj(alpha_j);
  Mat out = l_rho * c.Ld;
  out.noalias() += alpha_k * (s_rho * c.Ld);
  out.noalias() += aj_c * (l_rho * c.Sd);
  out.noalias() += (aj_c * alpha_k) * (s_rho * c.Sd);
  return out;
}

// ---------------------------------------------------------------------------
// Vacuum filter pieces

/// H_L rho = L rho + rho L^dag - tr{(L + L^dag) rho} rho
template <class Mat>
inline Mat homodyne_backaction(const SystemCache<Mat>& c, const Mat& rho) {
  const double k = tr_prod(c.LpLd, rho).real();
  return c.L * rho + rho * c.Ld - k * rho;
}

}  // namespace qtraj::detail
