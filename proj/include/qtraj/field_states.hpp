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

#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/operator_algebra.hpp"
#include "qtraj/quadrature.hpp"

namespace qtraj {

using ComplexFn = std::function<Complex(double)>;

/// Interval outside which a time function is treated as zero for integrals.
struct Support {
  double lo = 0.0;
  double hi = 0.0;
};

/// Default clamp for lambda(t) = xi(t) / sqrt(w(t)).
inline constexpr double kLambdaEps = 1e-12;

/// Temporal profile of a continuous-mode single photon (units time^-1/2).
class Wavepacket {
 public:
  Wavepacket(ComplexFn xi, Support support, std::vector<double> breakpoints = {},
             std::string kind = "custom");

  Complex operator()(double t) const { return xi_(t); }
  const ComplexFn& function() const noexcept { return xi_; }
  const Support& support() const noexcept { return support_; }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  const std::string& kind() const noexcept { return kind_; }

  /// Integral of |xi|^2 over the support (cached at construction).
  double norm() const noexcept { return norm_; }

  /// Integral of |xi|^2 over [a, b] (not clipped to the support).
  double mass(double a, double b) const;

  /// Throws InvariantError unless |norm - 1| <= tol.
  void validate(double tol = 1e-6) const;

 private:
  ComplexFn xi_;
  Support support_;
  std::vector<double> breakpoints_;
  std::string kind_;
  double norm_ = 0.0;
};

/// xi(t) = (Omega^2 / 2 pi)^(1/4) exp(-Omega^2 (t - t_c)^2 / 4), support t_c +- 6/Omega.
Wavepacket gaussian_wavepacket(double omega, double t_c);

/// xi(t) = value on [lo, hi], zero elsewhere. Requires |value|^2 (hi - lo) = 1.
Wavepacket constant_wavepacket(Complex value, double lo, double hi);

/// Linear interpolation of samples, zero outside the sampled range.
Wavepacket table_wavepacket(std::vector<double> times, std::vector<Complex> values);

/// Piecewise-linear interpolant of (times, values), zero outside.
ComplexFn table_function(std::vector<double> times, std::vector<Complex> values);

/// w(t) = integral_t^inf |xi(s)|^2 ds.
double survival_w(const Wavepacket& xi, double t);

/// lambda(t) = xi(t) / sqrt(max(w(t), eps)).
Complex generator_coupling_lambda(const Wavepacket& xi, double t, double eps = kLambdaEps);

/// Photon-case table w00 = w(t), w01 = w10 = sqrt(w(t)), w11 = 1 (0 = vacuum, 1 = photon).
double photon_weights(const Wavepacket& xi, int j, int k, double t);

// ---------------------------------------------------------------------------
// Coherent amplitudes

/// n amplitude functions alpha_j(t) sharing one support. Indices are 0-based.
class CoherentAmplitudes {
 public:
  CoherentAmplitudes(std::vector<ComplexFn> alphas, Support support,
                     std::vector<double> breakpoints = {});

  std::size_t size() const noexcept { return alphas_.size(); }
  Complex operator()(std::size_t j, double t) const { return alphas_[j](t); }
  void values(double t, std::span<Complex> out) const;
  const ComplexFn& function(std::size_t j) const { return alphas_.at(j); }
  const Support& support() const noexcept { return support_; }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }

  /// <alpha_j, alpha_k> = integral of conj(alpha_j) alpha_k over the support.
  Complex inner(std::size_t j, std::size_t k) const;

  /// Throws InvariantError when two amplitudes coincide (sampled L2 distance <= tol).
  void validate_distinct(double tol = 1e-9) const;

 private:
  std::vector<ComplexFn> alphas_;
  Support support_;
  std::vector<double> breakpoints_;
};

/// alpha(t) = value on [lo, hi], zero elsewhere.
ComplexFn constant_amplitude(Complex value, double lo, double hi);

/// alpha(t) = amplitude * gaussian_wavepacket(omega, t_c)(t).
ComplexFn gaussian_amplitude(Complex amplitude, double omega, double t_c);

/// <a|b> = exp(-|a|^2/2 - |b|^2/2 + <a, b>) for coherent states with amplitudes a, b.
Complex coherent_overlap(const ComplexFn& a, const ComplexFn& b, Support support,
                         std::span<const double> breakpoints = {});

/// Gram matrix g_jk = <alpha_j | alpha_k>; Hermitian positive semidefinite.
Eigen::MatrixXcd gram_matrix(const CoherentAmplitudes& amps);

/// m_jk(t) = conj(alpha_j) alpha_k - |alpha_j|^2/2 - |alpha_k|^2/2.
Complex cat_mjk(const CoherentAmplitudes& amps, std::size_t j, std::size_t k, double t);

/// w_jk(t) = exp(integral_{t0}^t m_jk) / (N_a g_jk). Throws InvariantError
/// ("overlap underflow") when |g_jk| <= 1e-12.
Complex cat_wjk(const CoherentAmplitudes& amps, const Eigen::MatrixXcd& gamma, std::size_t j,
                std::size_t k, double t, double t0 = 0.0);
Complex cat_wjk(const CoherentAmplitudes& amps, const Eigen::MatrixXcd& gamma,
                const Eigen::MatrixXcd& gram, std::size_t j, std::size_t k, double t,
                double t0 = 0.0);

// ---------------------------------------------------------------------------
// Weights

/// Weight matrix gamma of a field combination. The field state is
/// sum_{jk} gamma_kj |phi_j><phi_k|, so gamma_jk = s_k conj(s_j) for a
/// superposition sum_j s_j |phi_j>.
struct WeightMatrix {
  Eigen::MatrixXcd gamma;

  long n() const noexcept { return gamma.rows(); }
  /// N_a = sum_l gamma_ll.
  double ancilla_norm() const;

  /// Hermitian, PSD, trace 1.
  void validate_photon(double tol = 1e-9) const;
  /// Hermitian, PSD, sum_jk gamma_jk g_jk = 1.
  void validate_coherent(const Eigen::MatrixXcd& gram, double tol = 1e-9) const;

  static WeightMatrix superposition(std::span<const Complex> coeffs);
  static WeightMatrix diagonal(std::span<const double> probabilities);
};

/// Superposition weights rescaled so that sum gamma_jk g_jk = 1.
WeightMatrix normalized_coherent_superposition(std::span<const Complex> coeffs,
                                               const Eigen::MatrixXcd& gram);

// ---------------------------------------------------------------------------
// Field specifications

struct VacuumField {};

/// Photon/vacuum combination; gamma indexed 0 = vacuum, 1 = photon.
struct PhotonCombination {
  WeightMatrix gamma;
  Wavepacket xi;
};

struct CoherentCombination {
  WeightMatrix gamma;
  CoherentAmplitudes amps;
  Eigen::MatrixXcd gram;
};

using FieldSpec = std::variant<VacuumField, PhotonCombination, CoherentCombination>;

/// Validated constructors.
PhotonCombination make_photon_combination(WeightMatrix gamma, Wavepacket xi);
CoherentCombination make_coherent_combination(WeightMatrix gamma, CoherentAmplitudes amps);

/// Single-photon field (gamma = diag(0, 1)).
PhotonCombination single_photon(Wavepacket xi);

}  // namespace qtraj
