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

#include <functional>

#include "qtraj/operator_algebra.hpp"

namespace qtraj {

/// Single-channel open system (S, L, H). S unitary, H Hermitian.
struct SlhTriple {
  Operator S;
  Operator L;
  Operator H;

  long dim() const noexcept { return S.rows(); }

  /// Throws DimensionError / InvariantError if the triple is malformed.
  void validate(double tol = kStructureTolerance) const;

  /// Validated construction.
  static SlhTriple make(Operator S, Operator L, Operator H);
};

using OperatorFn = std::function<Operator(double)>;

/// Triple with time-dependent coupling and Hamiltonian; S is constant.
/// The closures must be safe to call concurrently.
struct TimedSlhTriple {
  Operator S;
  OperatorFn L;
  OperatorFn H;
  long dim = 0;

  SlhTriple at(double t) const;

  static TimedSlhTriple constant(const SlhTriple& G);
};

/// Im A = (A - A^dag) / 2i
Operator im_part(const Operator& A);

/// Kronecker product A (x) B.
Operator kron(const Operator& A, const Operator& B);

/// G2 <| G1 = (S2 S1, L2 + S2 L1, H1 + H2 + Im{L2^dag S2 L1}); G1 feeds G2.
/// Both operands must already live on the same space (see embed).
SlhTriple series_product(const SlhTriple& G2, const SlhTriple& G1);
TimedSlhTriple series_product(const TimedSlhTriple& G2, const TimedSlhTriple& G1);
TimedSlhTriple series_product(const SlhTriple& G2, const TimedSlhTriple& G1);
TimedSlhTriple series_product(const TimedSlhTriple& G2, const SlhTriple& G1);

/// Slot of the embedded factor in ancilla (x) system ordering: `left` gives
/// A (x) I_other, `right` gives I_other (x) A.
enum class Slot { left, right };

Operator embed(const Operator& A, Slot slot, long other_dim);
SlhTriple embed(const SlhTriple& G, Slot slot, long other_dim);
TimedSlhTriple embed(const TimedSlhTriple& G, Slot slot, long other_dim);

}  // namespace qtraj
