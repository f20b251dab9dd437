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

#include "qtraj/field_states.hpp"
#include "qtraj/master_hierarchy.hpp"
#include "qtraj/slh_network.hpp"

namespace qtraj {

enum class MeasurementKind { homodyne, counting };

inline constexpr double kIntensityFloor = 1e-10;

struct MeasurementScheme {
  MeasurementKind kind = MeasurementKind::homodyne;
  /// Jump maps are applied only when the intensity reaches this floor.
  double intensity_floor = kIntensityFloor;

  void validate() const;
};

/// Conditional blocks plus the running measurement bookkeeping.
struct FilterState {
  HierarchyState hierarchy;
  double last_innovation = 0.0;
  /// Y(t) (homodyne) or N(t) (counting).
  double record = 0.0;
  /// W(t), or N(t) - integral of the intensity for counting.
  double innovation_sum = 0.0;

  double t() const noexcept { return hierarchy.t; }
};

FilterState make_filter_state(const FieldSpec& field, const Ket& eta, double t0 = 0.0);

// ---------------------------------------------------------------------------
// Vacuum input

/// H_L rho = L rho + rho L^dag - tr{(L + L^dag) rho} rho
Operator homodyne_backaction(const Operator& L, const Operator& rho);

/// tr{rho L^dag L}
double vacuum_counting_intensity(const Operator& L, const Operator& rho);

/// rho + L*rho dt + H_L rho dW
Operator vacuum_homodyne_step(const SlhTriple& G, const Operator& rho, double dW, double dt);

/// rho + L*rho dt + (L rho L^dag / nu - rho)(dN - nu dt). The click is
/// dropped when nu < floor.
Operator vacuum_counting_step(const SlhTriple& G, const Operator& rho, int dN, double dt,
                              double floor = kIntensityFloor);

// ---------------------------------------------------------------------------
// Photon/vacuum combinations (2 x 2 blocks)

/// K_t = tr{(L + L^dag) rho11} + tr{S rho01} xi + tr{S^dag rho10} conj(xi)
double photon_homodyne_rate(const SlhTriple& G, Complex xi_t, const HierarchyState& state);

/// nu_t = tr{rho11 L^dag L} + tr{rho10 S^dag L} conj(xi) + tr{rho01 L^dag S} xi + tr{rho00} |xi|^2
double photon_counting_intensity(const SlhTriple& G, Complex xi_t, const HierarchyState& state);

/// One step driven by the innovation increment dW.
FilterState photon_homodyne_step(const SlhTriple& G, Complex xi_t, const FilterState& state,
                                 double dW, double dt);

/// One step driven by the count increment dN in {0, 1}. Throws StepError
/// when dN = 1 arrives with nu_t below the floor.
FilterState photon_counting_step(const SlhTriple& G, Complex xi_t, const FilterState& state,
                                 int dN, double dt, double floor = kIntensityFloor);

// ---------------------------------------------------------------------------
// Coherent-state combinations (n x n blocks)

/// sum_l (gamma_ll / N_a) tr{(L + L^dag + S a_l + S^dag conj(a_l)) rho^ll}
double cat_homodyne_rate(const SlhTriple& G, const CoherentAmplitudes& amps,
                         const WeightMatrix& gamma, double t, const HierarchyState& state);

/// sum_l (gamma_ll / N_a) tr{rho^ll (L^dag L + a_l L^dag S + conj(a_l) S^dag L + |a_l|^2)}
double cat_counting_intensity(const SlhTriple& G, const CoherentAmplitudes& amps,
                              const WeightMatrix& gamma, double t, const HierarchyState& state);

FilterState cat_homodyne_step(const SlhTriple& G, const CoherentAmplitudes& amps,
                              const WeightMatrix& gamma, double t, const FilterState& state,
                              double dW, double dt);

FilterState cat_counting_step(const SlhTriple& G, const CoherentAmplitudes& amps,
                              const WeightMatrix& gamma, double t, const FilterState& state,
                              int dN, double dt, double floor = kIntensityFloor);

// ---------------------------------------------------------------------------
// Conditional state

/// Normalized combination: photon sum gamma_kj rho^{jk} / sum gamma_kj tr rho^{jk},
/// cat with gamma_jk. Throws InvariantError ("conditional normalization
/// collapse") when the denominator is below 1e-12 in magnitude.
Operator conditional_combine(const WeightMatrix& gamma, const HierarchyState& state);

/// Mean of dY/dt (homodyne) or click intensity (counting) predicted by the
/// conditional state for the physical field law. For a pure single photon
/// this is K_t or nu_t; for general weights it is the gamma-weighted ratio of
/// linear-coefficient traces.
double predicted_record_rate(const SlhTriple& G, const FieldSpec& field, MeasurementKind kind,
                             double t, const HierarchyState& state);

}  // namespace qtraj
