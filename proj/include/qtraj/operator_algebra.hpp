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
#include <string_view>

#include <Eigen/Dense>

namespace qtraj {

using Complex = std::complex<double>;

/// Dense operator on a finite-dimensional Hilbert space. Units: hbar = 1,
/// rates in units of the reference decay rate.
using Operator = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Tolerance of the Hermiticity/unitarity/trace predicates.
inline constexpr double kStructureTolerance = 1e-9;

struct SlhTriple;

// ---------------------------------------------------------------------------
// Predicates

/// Largest entry of |A - A^dagger|.
double hermiticity_defect(const Operator& op);
/// Largest entry of |U^dagger U - I|.
double unitarity_defect(const Operator& op);

bool is_square(const Operator& op);
bool is_hermitian(const Operator& op, double tol = kStructureTolerance);
bool is_unitary(const Operator& op, double tol = kStructureTolerance);

/// Throws DimensionError unless both operators are square with equal size.
void require_same_dim(const Operator& a, const Operator& b, std::string_view what);

/// Hermiticity and trace assertion for density-tagged values. Active only
/// when the library is built with QTRAJ_INVARIANT_CHECKS; throws
/// InvariantError on violation.
void assert_density(const Operator& rho, Complex target_trace, std::string_view what,
                    double tol = kStructureTolerance);

/// True when assert_density performs its checks in this build.
bool invariant_checks_enabled() noexcept;

// ---------------------------------------------------------------------------
// Superoperators

/// D_L X = L^dag X L - (L^dag L X + X L^dag L) / 2.
Operator dissipator(const Operator& L, const Operator& X);

/// D*_L rho = L rho L^dag - (L^dag L rho + rho L^dag L) / 2. Trace-annihilating.
Operator dissipator_adjoint(const Operator& L, const Operator& rho);

/// Heisenberg-picture generator -i[X, H] + D_L X. S does not enter.
Operator lindbladian(const SlhTriple& G, const Operator& X);

/// Schroedinger-picture generator -i[H, rho] + D*_L rho.
Operator liouvillian(const SlhTriple& G, const Operator& rho);

// ---------------------------------------------------------------------------
// Presets

/// Two-level operators in the basis {|g>, |e>} (index 0 = ground).
struct TwoLevelOperators {
  Operator sigma_minus;  ///< |g><e|
  Operator sigma_plus;   ///< |e><g|
  Operator excited;      ///< sigma_plus sigma_minus = |e><e|
  Operator ground;       ///< |g><g|
  Operator identity;
};

TwoLevelOperators preset_two_level();

Ket ground_ket();
Ket excited_ket();

/// Truncated harmonic oscillator with `dim` Fock levels.
struct CavityOperators {
  Operator annihilation;
  Operator creation;
  Operator number;
  Operator identity;
};

CavityOperators preset_cavity(int dim);

/// Fock state |n> in a space of dimension `dim`.
Ket fock_ket(int dim, int n);

inline Operator projector(const Ket& psi) { return psi * psi.adjoint(); }

}  // namespace qtraj
