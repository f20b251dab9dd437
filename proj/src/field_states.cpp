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

#include "qtraj/field_states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qtraj/error.hpp"

namespace qtraj {

namespace {

// Gaussian support half-width in units of 1/Omega (the std of |xi|^2).
constexpr double kGaussianWidths = 6.0;

std::string pair_name(std::size_t j, std::size_t k) {
  return "(" + std::to_string(j) + "," + std::to_string(k) + ")";
}

void check_index(std::size_t j, std::size_t n, const char* what) {
  if (j >= n)
    throw IndexError(std::string(what) + ": index " + std::to_string(j) + " outside 0.." +
                     std::to_string(n == 0 ? 0 : n - 1));
}

double min_eigenvalue(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (h + h.adjoint()),
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// Wavepacket

Wavepacket::Wavepacket(ComplexFn xi, Support support, std::vector<double> breakpoints,
                       std::string kind)
    : xi_(std::move(xi)),
      support_(support),
      breakpoints_(std::move(breakpoints)),
      kind_(std::move(kind)) {
  if (!(support_.hi > support_.lo))
    throw InvariantError("wavepacket support must satisfy lo < hi");
  norm_ = mass(support_.lo, support_.hi);
}

double Wavepacket::mass(double a, double b) const {
  if (b <= a) return 0.0;
  return integrate([this](double t) { return std::norm(xi_(t)); }, a, b, breakpoints_);
}

void Wavepacket::validate(double tol) const {
  if (std::abs(norm_ - 1.0) > tol) {
    std::ostringstream os;
    os << "wavepacket is not normalized: integral of |xi|^2 = " << norm_;
    throw InvariantError(os.str());
  }
}

Wavepacket gaussian_wavepacket(double omega, double t_c) {
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw InvariantError("gaussian_wavepacket: Omega must be positive");
  const double amp = std::pow(omega * omega / (2.0 * std::numbers::pi), 0.25);
  auto xi = [amp, omega, t_c](double t) -> Complex {
    const double u = t - t_c;
    return {amp * std::exp(-omega * omega * u * u / 4.0), 0.0};
  };
  const double half = kGaussianWidths / omega;
  Wavepacket w(xi, Support{t_c - half, t_c + half}, {t_c}, "gaussian");
  w.validate();
  return w;
}

Wavepacket constant_wavepacket(Complex value, double lo, double hi) {
  if (!(hi > lo)) throw InvariantError("constant_wavepacket: window must satisfy lo < hi");
  Wavepacket w(constant_amplitude(value, lo, hi), Support{lo, hi}, {}, "constant");
  w.validate();
  return w;
}

ComplexFn table_function(std::vector<double> times, std::vector<Complex> values) {
  if (times.size() != values.size() || times.size() < 2)
    throw InvariantError("table needs at least two (t, value) samples of equal length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvariantError("table times must be strictly increasing");
  return [times = std::move(times), values = std::move(values)](double t) -> Complex {
    if (t < times.front() || t > times.back()) return {0.0, 0.0};
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) return values.back();
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double a = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return (1.0 - a) * values[i - 1] + a * values[i];
  };
}

Wavepacket table_wavepacket(std::vector<double> times, std::vector<Complex> values) {
  const Support s{times.empty() ? 0.0 : times.front(), times.empty() ? 0.0 : times.back()};
  std::vector<double> bp = times;
  Wavepacket w(table_function(std::move(times), std::move(values)), s, std::move(bp), "table");
  w.validate();
  return w;
}

double survival_w(const Wavepacket& xi, double t) {
  const auto& s = xi.support();
  if (t >= s.hi) return 0.0;
  return xi.mass(std::max(t, s.lo), s.hi);
}

Complex generator_coupling_lambda(const Wavepacket& xi, double t, double eps) {
  if (!(eps > 0.0)) throw InvariantError("generator_coupling_lambda: eps must be positive");
  return xi(t) / std::sqrt(std::max(survival_w(xi, t), eps));
}

double photon_weights(const Wavepacket& xi, int j, int k, double t) {
  if (j < 0 || j > 1 || k < 0 || k > 1) throw IndexError("photon_weights: indices must be 0 or 1");
  if (j == 1 && k == 1) return 1.0;
  const double w = survival_w(xi, t);
  if (j == 0 && k == 0) return w;
  return std::sqrt(w);
}

// ---------------------------------------------------------------------------
// Coherent amplitudes

CoherentAmplitudes::CoherentAmplitudes(std::vector<ComplexFn> alphas, Support support,
                                       std::vector<double> breakpoints)
    : alphas_(std::move(alphas)), support_(support), breakpoints_(std::move(breakpoints)) {
  if (alphas_.empty()) throw InvariantError("coherent amplitudes: need at least one amplitude");
  if (!(support_.hi > support_.lo))
    throw InvariantError("coherent amplitudes: support must satisfy lo < hi");
}

void CoherentAmplitudes::values(double t, std::span<Complex> out) const {
  for (std::size_t j = 0; j < alphas_.size(); ++j) out[j] = alphas_[j](t);
}

Complex CoherentAmplitudes::inner(std::size_t j, std::size_t k) const {
  check_index(j, size(), "CoherentAmplitudes::inner");
  check_index(k, size(), "CoherentAmplitudes::inner");
  const auto& a = alphas_[j];
  const auto& b = alphas_[k];
  return integrate_complex([&](double t) { return std::conj(a(t)) * b(t); }, support_.lo,
                           support_.hi, breakpoints_);
}

void CoherentAmplitudes::validate_distinct(double tol) const {
  for (std::size_t j = 0; j < size(); ++j)
    for (std::size_t k = j + 1; k < size(); ++k) {
      const auto& a = alphas_[j];
      const auto& b = alphas_[k];
      const double d2 = integrate([&](double t) { return std::norm(a(t) - b(t)); }, support_.lo,
                                  support_.hi, breakpoints_);
      if (std::sqrt(std::max(d2, 0.0)) <= tol)
        throw InvariantError("coherent amplitudes " + pair_name(j, k) + " coincide");
    }
}

ComplexFn constant_amplitude(Complex value, double lo, double hi) {
  return [value, lo, hi](double t) -> Complex {
    return (t >= lo && t <= hi) ? value : Complex{0.0, 0.0};
  };
}

ComplexFn gaussian_amplitude(Complex amplitude, double omega, double t_c) {
  if (!(omega > 0.0)) throw InvariantError("gaussian_amplitude: Omega must be positive");
  const double amp = std::pow(omega * omega / (2.0 * std::numbers::pi), 0.25);
  return [amplitude, amp, omega, t_c](double t) -> Complex {
    const double u = t - t_c;
    return amplitude * (amp * std::exp(-omega * omega * u * u / 4.0));
  };
}

Complex coherent_overlap(const ComplexFn& a, const ComplexFn& b, Support support,
                         std::span<const double> breakpoints) {
  const double na = integrate([&](double t) { return std::norm(a(t)); }, support.lo, support.hi,
                              breakpoints);
  const double nb = integrate([&](double t) { return std::norm(b(t)); }, support.lo, support.hi,
                              breakpoints);
  const Complex ab = integrate_complex([&](double t) { return std::conj(a(t)) * b(t); }, support.lo,
                               support.hi, breakpoints);
  return std::exp(-0.5 * na - 0.5 * nb + ab);
}

Eigen::MatrixXcd gram_matrix(const CoherentAmplitudes& amps) {
  const std::size_t n = amps.size();
  Eigen::MatrixXcd inner(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      inner(j, k) = amps.inner(j, k);
      inner(k, j) = std::conj(inner(j, k));
    }
  Eigen::MatrixXcd g(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      g(j, k) = std::exp(-0.5 * inner(j, j).real() - 0.5 * inner(k, k).real() + inner(j, k));
  return g;
}

Complex cat_mjk(const CoherentAmplitudes& amps, std::size_t j, std::size_t k, double t) {
  check_index(j, amps.size(), "cat_mjk");
  check_index(k, amps.size(), "cat_mjk");
  if (j == k) return {0.0, 0.0};
  const Complex aj = amps(j, t);
  const Complex ak = amps(k, t);
  return std::conj(aj) * ak - 0.5 * std::norm(aj) - 0.5 * std::norm(ak);
}

Complex cat_wjk(const CoherentAmplitudes& amps, const Eigen::MatrixXcd& gamma, std::size_t j,
                std::size_t k, double t, double t0) {
  check_index(j, amps.size(), "cat_wjk");
  check_index(k, amps.size(), "cat_wjk");
  const Complex g = coherent_overlap(amps.function(j), amps.function(k), amps.support(),
                                     amps.breakpoints());
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Identity(amps.size(), amps.size());
  gram(j, k) = g;
  return cat_wjk(amps, gamma, gram, j, k, t, t0);
}

Complex cat_wjk(const CoherentAmplitudes& amps, const Eigen::MatrixXcd& gamma,
                const Eigen::MatrixXcd& gram, std::size_t j, std::size_t k, double t,
                double t0) {
  check_index(j, amps.size(), "cat_wjk");
  check_index(k, amps.size(), "cat_wjk");
  const Complex g = gram(j, k);
  if (std::abs(g) <= 1e-12) throw InvariantError("overlap underflow for pair " + pair_name(j, k));
  const double n_a = gamma.diagonal().real().sum();
  if (!(std::abs(n_a) > 0.0)) throw InvariantError("cat_wjk: N_a vanishes");
  Complex exponent{0.0, 0.0};
  if (j != k && t != t0) {
    // Only the support contributes; m_jk vanishes where both amplitudes do.
    const auto& s = amps.support();
    const double a = std::clamp(std::min(t0, t), s.lo, s.hi);
    const double b = std::clamp(std::max(t0, t), s.lo, s.hi);
    Complex v{0.0, 0.0};
    if (b > a)
      v = integrate_complex([&](double u) { return cat_mjk(amps, j, k, u); }, a, b,
                            amps.breakpoints());
    exponent = t >= t0 ? v : -v;
  }
  return std::exp(exponent) / (n_a * g);
}

// ---------------------------------------------------------------------------
// Weights

double WeightMatrix::ancilla_norm() const { return gamma.diagonal().real().sum(); }

void WeightMatrix::validate_photon(double tol) const {
  if (gamma.rows() != 2 || gamma.cols() != 2)
    throw DimensionError("photon weight matrix must be 2x2", gamma.rows(), 2);
  if (hermiticity_defect(gamma) > tol) throw InvariantError("weight matrix gamma is not Hermitian");
  if (min_eigenvalue(gamma) < -tol)
    throw InvariantError("weight matrix gamma is not positive semidefinite");
  const Complex tr = gamma.trace();
  if (std::abs(tr - 1.0) > tol) {
    std::ostringstream os;
    os << "photon weight matrix must have unit trace (trace = " << tr.real() << ")";
    throw InvariantError(os.str());
  }
}

void WeightMatrix::validate_coherent(const Eigen::MatrixXcd& gram, double tol) const {
  if (gamma.rows() != gamma.cols() || gamma.rows() != gram.rows())
    throw DimensionError("coherent weight matrix must match the number of amplitudes",
                         gamma.rows(), gram.rows());
  if (hermiticity_defect(gamma) > tol) throw InvariantError("weight matrix gamma is not Hermitian");
  if (min_eigenvalue(gamma) < -tol)
    throw InvariantError("weight matrix gamma is not positive semidefinite");
  const Complex s = gamma.cwiseProduct(gram).sum();
  if (std::abs(s - 1.0) > tol) {
    std::ostringstream os;
    os << "coherent weights violate sum gamma_jk g_jk = 1 (sum = " << s.real() << " + "
       << s.imag() << "i)";
    throw InvariantError(os.str());
  }
}

WeightMatrix WeightMatrix::superposition(std::span<const Complex> coeffs) {
  const long n = static_cast<long>(coeffs.size());
  WeightMatrix w{Eigen::MatrixXcd(n, n)};
  for (long j = 0; j < n; ++j)
    for (long k = 0; k < n; ++k) w.gamma(j, k) = coeffs[k] * std::conj(coeffs[j]);
  return w;
}

WeightMatrix WeightMatrix::diagonal(std::span<const double> probabilities) {
  const long n = static_cast<long>(probabilities.size());
  WeightMatrix w{Eigen::MatrixXcd::Zero(n, n)};
  for (long j = 0; j < n; ++j) w.gamma(j, j) = probabilities[j];
  return w;
}

WeightMatrix normalized_coherent_superposition(std::span<const Complex> coeffs,
                                               const Eigen::MatrixXcd& gram) {
  WeightMatrix w = WeightMatrix::superposition(coeffs);
  if (gram.rows() != w.n())
    throw DimensionError("superposition vs Gram matrix", w.n(), gram.rows());
  const double s = w.gamma.cwiseProduct(gram).sum().real();
  if (!(s > 1e-300)) throw InvariantError("coherent superposition has zero norm");
  w.gamma /= s;
  return w;
}

// ---------------------------------------------------------------------------
// Field specifications

PhotonCombination make_photon_combination(WeightMatrix gamma, Wavepacket xi) {
  gamma.validate_photon();
  xi.validate();
  return PhotonCombination{std::move(gamma), std::move(xi)};
}

CoherentCombination make_coherent_combination(WeightMatrix gamma, CoherentAmplitudes amps) {
  amps.validate_distinct();
  Eigen::MatrixXcd gram = gram_matrix(amps);
  gamma.validate_coherent(gram);
  return CoherentCombination{std::move(gamma), std::move(amps), std::move(gram)};
}

PhotonCombination single_photon(Wavepacket xi) {
  const double p[] = {0.0, 1.0};
  return make_photon_combination(WeightMatrix::diagonal(p), std::move(xi));
}

}  // namespace qtraj
