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

#include "qtraj/slh_network.hpp"

#include <sstream>

#include "qtraj/error.hpp"

namespace qtraj {

void SlhTriple::validate(double tol) const {
  require_same_dim(S, L, "SlhTriple S/L");
  require_same_dim(S, H, "SlhTriple S/H");
  if (S.rows() < 1) throw DimensionError("SlhTriple: empty operators", 0, 1);
  const double u = unitarity_defect(S);
  if (u > tol) {
    std::ostringstream os;
    os << "SlhTriple: S is not unitary (defect " << u << ")";
    throw InvariantError(os.str());
  }
  const double h = hermiticity_defect(H);
  if (h > tol) {
    std::ostringstream os;
    os << "SlhTriple: H is not Hermitian (defect " << h << ")";
    throw InvariantError(os.str());
  }
}

SlhTriple SlhTriple::make(Operator S, Operator L, Operator H) {
  SlhTriple g{std::move(S), std::move(L), std::move(H)};
  g.validate();
  return g;
}

SlhTriple TimedSlhTriple::at(double t) const { return SlhTriple{S, L(t), H(t)}; }

TimedSlhTriple TimedSlhTriple::constant(const SlhTriple& G) {
  TimedSlhTriple out;
  out.S = G.S;
  out.dim = G.dim();
  Operator L = G.L;
  Operator H = G.H;
  out.L = [L](double) { return L; };
  out.H = [H](double) { return H; };
  return out;
}

Operator im_part(const Operator& A) { return (A - A.adjoint()) / (2.0 * kI); }

Operator kron(const Operator& A, const Operator& B) {
  Operator out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

namespace {

void check_pair(const Operator& S2, const Operator& S1) {
  require_same_dim(S2, S1, "series_product");
  const double u2 = unitarity_defect(S2);
  const double u1 = unitarity_defect(S1);
  if (u2 > kStructureTolerance || u1 > kStructureTolerance) {
    std::ostringstream os;
    os << "series_product: non-unitary scattering operator (defects " << u2 << ", " << u1 << ")";
    throw InvariantError(os.str());
  }
}

SlhTriple compose(const Operator& S2, const Operator& L2, const Operator& H2, const Operator& S1,
                  const Operator& L1, const Operator& H1) {
  SlhTriple out;
  out.S = S2 * S1;
  out.L = L2 + S2 * L1;
  out.H = H1 + H2 + im_part(L2.adjoint() * S2 * L1);
  return out;
}

}  // namespace

SlhTriple series_product(const SlhTriple& G2, const SlhTriple& G1) {
  check_pair(G2.S, G1.S);
  require_same_dim(G2.S, G2.L, "series_product G2");
  require_same_dim(G1.S, G1.L, "series_product G1");
  return compose(G2.S, G2.L, G2.H, G1.S, G1.L, G1.H);
}

TimedSlhTriple series_product(const TimedSlhTriple& G2, const TimedSlhTriple& G1) {
  check_pair(G2.S, G1.S);
  TimedSlhTriple out;
  out.S = G2.S * G1.S;
  out.dim = out.S.rows();
  const Operator S2 = G2.S;
  auto L2 = G2.L;
  auto L1 = G1.L;
  auto H2 = G2.H;
  auto H1 = G1.H;
  out.L = [S2, L2, L1](double t) -> Operator { return L2(t) + S2 * L1(t); };
  out.H = [S2, L2, L1, H2, H1](double t) -> Operator {
    const Operator l2 = L2(t);
    return H1(t) + H2(t) + im_part(l2.adjoint() * S2 * L1(t));
  };
  return out;
}

TimedSlhTriple series_product(const SlhTriple& G2, const TimedSlhTriple& G1) {
  return series_product(TimedSlhTriple::constant(G2), G1);
}

TimedSlhTriple series_product(const TimedSlhTriple& G2, const SlhTriple& G1) {
  return series_product(G2, TimedSlhTriple::constant(G1));
}

Operator embed(const Operator& A, Slot slot, long other_dim) {
  if (other_dim < 1) throw DimensionError("embed: other_dim must be positive", other_dim, 1);
  const Operator id = Operator::Identity(other_dim, other_dim);
  return slot == Slot::left ? kron(A, id) : kron(id, A);
}

SlhTriple embed(const SlhTriple& G, Slot slot, long other_dim) {
  return SlhTriple{embed(G.S, slot, other_dim), embed(G.L, slot, other_dim),
                   embed(G.H, slot, other_dim)};
}

TimedSlhTriple embed(const TimedSlhTriple& G, Slot slot, long other_dim) {
  TimedSlhTriple out;
  out.S = embed(G.S, slot, other_dim);
  out.dim = out.S.rows();
  auto L = G.L;
  auto H = G.H;
  out.L = [L, slot, other_dim](double t) { return embed(L(t), slot, other_dim); };
  out.H = [H, slot, other_dim](double t) { return embed(H(t), slot, other_dim); };
  return out;
}

}  // namespace qtraj
