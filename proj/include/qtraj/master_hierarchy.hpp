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

#include <cmath>
#include <functional>
#include <vector>

#include "qtraj/field_states.hpp"
#include "qtraj/slh_network.hpp"
#include "qtraj/time_grid.hpp"

namespace qtraj {

enum class HierarchyKind { vacuum, photon, cat };

/// Family of d x d blocks rho^{jk}, stored row-major (blocks[j * n + k]).
///
/// photon: n = 2, index 0 = vacuum, 1 = photon; expectations use tr{rho^{jk dag} X}.
/// cat:    n amplitudes; expectations use tr{rho^{jk} X}.
/// vacuum: n = 1, the single density operator.
struct HierarchyState {
  HierarchyKind kind = HierarchyKind::vacuum;
  int n = 1;
  std::vector<Operator> blocks;
  double t = 0.0;

  Operator& block(int j, int k) { return blocks[static_cast<std::size_t>(j * n + k)]; }
  const Operator& block(int j, int k) const { return blocks[static_cast<std::size_t>(j * n + k)]; }
  long dim() const noexcept { return blocks.empty() ? 0 : blocks.front().rows(); }
};

HierarchyState vacuum_initial_state(const Operator& rho0, double t0 = 0.0);
/// rho^11 = rho^00 = |eta><eta|, off-diagonal blocks zero.
HierarchyState photon_initial_state(const Ket& eta, double t0 = 0.0);
/// rho^{jk} = |eta><eta| g_jk.
HierarchyState cat_initial_state(const Ket& eta, const Eigen::MatrixXcd& gram, double t0 = 0.0);
HierarchyState initial_state(const FieldSpec& field, const Ket& eta, double t0 = 0.0);

/// -i[H, rho] + D*_L rho
Operator vacuum_me_rhs(const SlhTriple& G, const Operator& rho);

/// Time derivative of the four photon blocks for wavepacket value xi_t.
HierarchyState photon_hierarchy_rhs(const SlhTriple& G, Complex xi_t, const HierarchyState& state);

/// Time derivative of the n x n cat blocks (each block evolves independently).
HierarchyState cat_hierarchy_rhs(const SlhTriple& G, const CoherentAmplitudes& amps, double t,
                                 const HierarchyState& state);

using HierarchyRhs = std::function<HierarchyState(double t, const HierarchyState&)>;

/// Right-hand side closure for the given field; the system cache is built once.
HierarchyRhs make_hierarchy_rhs(const SlhTriple& G, const FieldSpec& field);

using HierarchyObserver = std::function<void(const HierarchyState&, std::size_t step)>;

/// Classic fixed-step RK4. The observer sees the state after every step.
/// When `check_invariants` is set, block traces must stay at their initial
/// values (1e-7) and rho^{jk dag} = rho^{kj} must hold (1e-8) after every
/// step; violations throw InvariantError.
void propagate_rk4(HierarchyState& state, const HierarchyRhs& rhs, double dt, std::size_t steps,
                   const HierarchyObserver& observer = {},
                   bool check_invariants = invariant_checks_enabled());

/// Largest |tr rho^{jk} - target_jk| and largest |rho^{jk dag} - rho^{kj}|.
struct HierarchyDeviation {
  double trace = 0.0;
  double pairing = 0.0;
};
HierarchyDeviation hierarchy_deviation(const HierarchyState& state,
                                       const std::vector<Complex>& target_traces);

/// Physical density operator: photon sum gamma_kj rho^{jk}, cat sum gamma_jk rho^{jk}.
Operator combine_unconditional(const WeightMatrix& gamma, const HierarchyState& state);

/// varpi^{jk}(X): tr{rho^{jk dag} X} (photon) or tr{rho^{jk} X} (cat, vacuum).
Complex block_expectation(const HierarchyState& state, int j, int k, const Operator& X);

// ---------------------------------------------------------------------------
// Extended-system oracle

struct OracleOptions {
  /// Blocks whose weight w_jk(t) (photon) or |gamma_jk w_jk(t)| (cat) falls
  /// below this are marked invalid.
  double w_threshold = 1e-6;
  /// Compare every `sample_stride` steps.
  std::size_t sample_stride = 1;
};

struct OracleSample {
  double t = 0.0;
  HierarchyState blocks;
  std::vector<bool> valid;
};

/// Blocks reconstructed from the joint ancilla (x) system vacuum master
/// equation of G <| M, propagated with RK4 on `grid`.
std::vector<OracleSample> oracle_extended_me(const SlhTriple& G, const FieldSpec& field,
                                             const Ket& eta, const TimeGrid& grid,
                                             const OracleOptions& opts = {});

struct OracleReport {
  double max_deviation = 0.0;
  std::vector<double> block_max;  ///< per block, row-major
  std::size_t samples = 0;
  std::size_t valid_points = 0;
  std::size_t invalid_points = 0;
  double first_invalid_t = NAN;
  double tolerance = 1e-6;
  bool passed = false;
};

/// Propagates the hierarchy (or `hierarchy_override`, used by tests to inject
/// faults) alongside the oracle and reports the sup-norm deviation per block
/// over the valid region.
OracleReport oracle_check(const SlhTriple& G, const FieldSpec& field, const Ket& eta,
                          const TimeGrid& grid, const OracleOptions& opts = {},
                          double tolerance = 1e-6,
                          const HierarchyRhs* hierarchy_override = nullptr);

}  // namespace qtraj
