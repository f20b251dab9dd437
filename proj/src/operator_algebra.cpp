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

#include "qtraj/operator_algebra.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "qtraj/error.hpp"
#include "qtraj/slh_network.hpp"

namespace qtraj {

double hermiticity_defect(const Operator& op) {
  if (!is_square(op)) return INFINITY;
  if (op.size() == 0) return 0.0;
  return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Operator& op) {
  if (!is_square(op)) return INFINITY;
  if (op.size() == 0) return 0.0;
  const Operator id = Operator::Identity(op.rows(), op.cols());
  return (op.adjoint() * op - id).cwiseAbs().maxCoeff();
}

bool is_square(const Operator& op) { return op.rows() == op.cols(); }

bool is_hermitian(const Operator& op, double tol) { return hermiticity_defect(op) <= tol; }

bool is_unitary(const Operator& op, double tol) { return unitarity_defect(op) <= tol; }

void require_same_dim(const Operator& a, const Operator& b, std::string_view what) {
  if (!is_square(a))
    throw DimensionError(std::string(what) + " (non-square lhs)", a.rows(), a.cols());
  if (!is_square(b))
    throw DimensionError(std::string(what) + " (non-square rhs)", b.rows(), b.cols());
  if (a.rows() != b.rows()) throw DimensionError(std::string(what), a.rows(), b.rows());
}

bool invariant_checks_enabled() noexcept {
#ifdef QTRAJ_INVARIANT_CHECKS
  return true;
#else
  return false;
#endif
}

void assert_density(const Operator& rho, Complex target_trace, std::string_view what, double tol) {
  if (!invariant_checks_enabled()) return;
  const double herm = hermiticity_defect(rho);
  const double tr_err = std::abs(rho.trace() - target_trace);
  if (herm > tol || tr_err > tol) {
    std::ostringstream os;
    os << what << ": density check failed (hermiticity defect " << herm << ", trace error "
       << tr_err << ", tolerance " << tol << ")";
    throw InvariantError(os.str());
  }
}

Operator dissipator(const Operator& L, const Operator& X) {
  require_same_dim(L, X, "dissipator");
  const Operator LdL = L.adjoint() * L;
  return L.adjoint() * X * L - 0.5 * (LdL * X + X * LdL);
}

Operator dissipator_adjoint(const Operator& L, const Operator& rho) {
  require_same_dim(L, rho, "dissipator_adjoint");
  const Operator LdL = L.adjoint() * L;
  return L * rho * L.adjoint() - 0.5 * (LdL * rho + rho * LdL);
}

Operator lindbladian(const SlhTriple& G, const Operator& X) {
  require_same_dim(G.L, X, "lindbladian");
  return -kI * (X * G.H - G.H * X) + dissipator(G.L, X);
}

Operator liouvillian(const SlhTriple& G, const Operator& rho) {
  require_same_dim(G.L, rho, "liouvillian");
  return -kI * (G.H * rho - rho * G.H) + dissipator_adjoint(G.L, rho);
}

TwoLevelOperators preset_two_level() {
  TwoLevelOperators ops;
  ops.sigma_minus = Operator::Zero(2, 2);
  ops.sigma_minus(0, 1) = 1.0;
  ops.sigma_plus = ops.sigma_minus.adjoint();
  ops.excited = ops.sigma_plus * ops.sigma_minus;
  ops.ground = ops.sigma_minus * ops.sigma_plus;
  ops.identity = Operator::Identity(2, 2);
  return ops;
}

Ket ground_ket() { return fock_ket(2, 0); }
Ket excited_ket() { return fock_ket(2, 1); }

CavityOperators preset_cavity(int dim) {
  if (dim < 1) throw DimensionError("preset_cavity needs dim >= 1", dim, 1);
  CavityOperators ops;
  ops.annihilation = Operator::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) ops.annihilation(n - 1, n) = std::sqrt(static_cast<double>(n));
  ops.creation = ops.annihilation.adjoint();
  ops.number = ops.creation * ops.annihilation;
  ops.identity = Operator::Identity(dim, dim);
  return ops;
}

Ket fock_ket(int dim, int n) {
  if (dim < 1 || n < 0 || n >= dim) throw IndexError("fock_ket: level " + std::to_string(n) +
                                                     " outside dimension " + std::to_string(dim));
  Ket k = Ket::Zero(dim);
  k(n) = 1.0;
  return k;
}

}  // namespace qtraj
