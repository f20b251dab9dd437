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

// One Euler-Maruyama / thinned-jump step of each filter, generic over the
// matrix type. Blocks are updated in place. Counting steps use the
// compensated form
//   rho += drift dt + (num / nu - rho) (dN - nu dt)
// written so that the no-click branch never divides by nu.

#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "qtraj/detail/kernels.hpp"

namespace qtraj::detail {

/// Thrown by the counting steps when a click is requested at an intensity
/// below the floor; callers translate it into their own error type.
struct VanishingIntensity {
  double intensity;
};

// ---------------------------------------------------------------------------
// Vacuum

// The *_apply forms take the rate K already evaluated on the current state,
// so a caller holding the record increment dY can pass dW = dY - K dt.

template <class Mat>
void vacuum_homodyne_apply(const SystemCache<Mat>& c, double k, Mat& rho, double dW, double dt) {
  Mat drift = liouvillian(c, rho);
  Mat diff = c.L * rho + rho * c.Ld - k * rho;
  rho += dt * drift + dW * diff;
}

template <class Mat>
double vacuum_homodyne_update(const SystemCache<Mat>& c, Mat& rho, double dW, double dt) {
  const double k = tr_prod(c.LpLd, rho).real();
  vacuum_homodyne_apply(c, k, rho, dW, dt);
  return k;
}

template <class Mat>
double vacuum_counting_update(const SystemCache<Mat>& c, Mat& rho, int dN, double dt,
                              double floor) {
  const double nu = tr_prod(rho, c.LdL).real();
  Mat drift = liouvillian(c, rho);
  Mat num = c.L * rho * c.Ld;
  if (nu < floor) dN = 0;  // jump skipped at vanishing intensity
  Mat inc = dt * (drift - num + nu * rho);
  if (dN != 0) inc += (1.0 / nu) * num - rho;
  rho += inc;
  return nu;
}

// ---------------------------------------------------------------------------
// Photon (blocks indexed 2 j + k)

template <class Mat>
void photon_homodyne_apply(const SystemCache<Mat>& c, Complex xi, double k, std::span<Mat, 4> r,
                           double dW, double dt) {
  std::span<const Mat, 4> rc(r.data(), 4);
  std::array<Mat, 4> drift, diff;
  photon_drift(c, xi, rc, std::span<Mat, 4>(drift));
  photon_homodyne_diffusion(c, xi, k, rc, std::span<Mat, 4>(diff));
  for (int b = 0; b < 4; ++b) r[b] += dt * drift[b] + dW * diff[b];
}

template <class Mat>
double photon_homodyne_update(const SystemCache<Mat>& c, Complex xi, std::span<Mat, 4> r,
                              double dW, double dt) {
  const double k = photon_homodyne_rate(c, xi, std::span<const Mat, 4>(r.data(), 4));
  photon_homodyne_apply(c, xi, k, r, dW, dt);
  return k;
}

template <class Mat>
void photon_counting_apply(const SystemCache<Mat>& c, Complex xi, double nu, std::span<Mat, 4> r,
                           int dN, double dt) {
  std::span<const Mat, 4> rc(r.data(), 4);
  std::array<Mat, 4> drift, num;
  photon_drift(c, xi, rc, std::span<Mat, 4>(drift));
  photon_jump_numerators(c, xi, rc, std::span<Mat, 4>(num));
  for (int b = 0; b < 4; ++b) {
    Mat inc = dt * (drift[b] - num[b] + nu * r[b]);
    if (dN != 0) inc += (1.0 / nu) * num[b] - r[b];
    r[b] += inc;
  }
}

template <class Mat>
double photon_counting_update(const SystemCache<Mat>& c, Complex xi, std::span<Mat, 4> r, int dN,
                              double dt, double floor) {
  const double nu = photon_counting_intensity(c, xi, std::span<const Mat, 4>(r.data(), 4));
  if (dN != 0 && nu < floor) throw VanishingIntensity{nu};
  photon_counting_apply(c, xi, nu, r, dN, dt);
  return nu;
}

/// Trace of the linear (unnormalized) homodyne coefficient of each block;
/// the 11 entry equals K_t when tr rho^11 = 1.
template <class Mat>
std::array<Complex, 4> photon_homodyne_linear_traces(const SystemCache<Mat>& c, Complex xi,
                                                     std::span<const Mat, 4> r) {
  const Complex xc = std::conj(xi);
  return {tr_prod(c.LpLd, r[0]), tr_prod(c.LpLd, r[1]) + xc * tr_prod(r[0], c.Sd),
          tr_prod(c.LpLd, r[2]) + xi * tr_prod(c.S, r[0]),
          tr_prod(c.LpLd, r[3]) + xc * tr_prod(r[2], c.Sd) + xi * tr_prod(c.S, r[1])};
}

/// Trace of each photon jump numerator.
template <class Mat>
std::array<Complex, 4> photon_counting_linear_traces(const SystemCache<Mat>& c, Complex xi,
                                                     std::span<const Mat, 4> r) {
  const Complex xc = std::conj(xi);
  return {tr_prod(r[0], c.LdL), tr_prod(r[1], c.LdL) + xc * tr_prod(r[0], c.SdL),
          tr_prod(r[2], c.LdL) + xi * tr_prod(r[0], c.LdS),
          tr_prod(r[3], c.LdL) + xc * tr_prod(r[2], c.SdL) + xi * tr_prod(r[1], c.LdS) +
              std::norm(xi) * r[0].trace()};
}

// ---------------------------------------------------------------------------
// Cat (blocks indexed n j + k)

template <class Mat>
void cat_homodyne_apply(const SystemCache<Mat>& c, std::span<const Complex> alpha, double k,
                        std::span<Mat> r, double dW, double dt) {
  const std::size_t n = alpha.size();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) {
      Mat& rho = r[j * n + l];
      Mat drift = cat_drift(c, alpha[j], alpha[l], rho);
      Mat diff = cat_homodyne_diffusion(c, alpha[j], alpha[l], k, rho);
      rho += dt * drift + dW * diff;
    }
}

template <class Mat>
double cat_homodyne_update(const SystemCache<Mat>& c, std::span<const Complex> alpha,
                           std::span<const double> diag_weights, std::span<Mat> r, double dW,
                           double dt) {
  const double k =
      cat_homodyne_rate(c, alpha, diag_weights, std::span<const Mat>(r.data(), r.size()));
  cat_homodyne_apply(c, alpha, k, r, dW, dt);
  return k;
}

template <class Mat>
void cat_counting_apply(const SystemCache<Mat>& c, std::span<const Complex> alpha, double nu,
                        std::span<Mat> r, int dN, double dt) {
  const std::size_t n = alpha.size();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) {
      Mat& rho = r[j * n + l];
      Mat drift = cat_drift(c, alpha[j], alpha[l], rho);
      Mat num = cat_jump_numerator(c, alpha[j], alpha[l], rho);
      Mat inc = dt * (drift - num + nu * rho);
      if (dN != 0) inc += (1.0 / nu) * num - rho;
      rho += inc;
    }
}

template <class Mat>
double cat_counting_update(const SystemCache<Mat>& c, std::span<const Complex> alpha,
                           std::span<const double> diag_weights, std::span<Mat> r, int dN,
                           double dt, double floor) {
  const double nu =
      cat_counting_intensity(c, alpha, diag_weights, std::span<const Mat>(r.data(), r.size()));
  if (dN != 0 && nu < floor) throw VanishingIntensity{nu};
  cat_counting_apply(c, alpha, nu, r, dN, dt);
  return nu;
}

/// tr{(L + L^dag + alpha_k S + conj(alpha_j) S^dag) rho^{jk}}
template <class Mat>
Complex cat_homodyne_linear_trace(const SystemCache<Mat>& c, Complex alpha_j, Complex alpha_k,
                                  const Mat& rho) {
  return tr_prod(c.LpLd, rho) + alpha_k * tr_prod(c.S, rho) +
         std::conj(alpha_j) * tr_prod(c.Sd, rho);
}

/// tr of the cat jump numerator of block (j, k).
template <class Mat>
Complex cat_counting_linear_trace(const SystemCache<Mat>& c, Complex alpha_j, Complex alpha_k,
                                  const Mat& rho) {
  return tr_prod(rho, c.LdL) + alpha_k * tr_prod(rho, c.LdS) +
         std::conj(alpha_j) * tr_prod(rho, c.SdL) + std::conj(alpha_j) * alpha_k * rho.trace();
}

// ---------------------------------------------------------------------------
// Record rate under the physical field law: gamma-weighted linear traces over
// the gamma-weighted block traces. `gamma(j, k)` is the weight of block (j, k)
// after the per-case index convention has been applied.

template <class Mat, class Weights>
double weighted_record_rate(const Weights& w, std::span<const Mat> r,
                            const std::vector<Complex>& linear_traces) {
  const std::size_t n = static_cast<std::size_t>(w.rows());
  Complex num{0.0, 0.0};
  Complex den{0.0, 0.0};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      const Complex g = w(j, k);
      if (g == Complex(0.0, 0.0)) continue;
      num += g * linear_traces[j * n + k];
      den += g * r[j * n + k].trace();
    }
  return (num / den).real();
}

}  // namespace qtraj::detail
