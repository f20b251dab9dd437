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

#include "qtraj/filter_hierarchy.hpp"

#include <cmath>
#include <sstream>

#include "qtraj/detail/filter_steps.hpp"
#include "qtraj/error.hpp"

namespace qtraj {

namespace {

using Cache = detail::SystemCache<Operator>;

void require_kind(const HierarchyState& s, HierarchyKind kind, int n, const char* what) {
  if (s.kind != kind || s.blocks.size() != static_cast<std::size_t>(s.n * s.n))
    throw InvariantError(std::string(what) + ": state has the wrong hierarchy kind");
  if (n > 0 && s.n != n) throw DimensionError(std::string(what) + ": block count", s.n, n);
}

std::span<const Operator, 4> blocks4(const HierarchyState& s) {
  return std::span<const Operator, 4>(s.blocks.data(), 4);
}

std::vector<double> diag_weights(const WeightMatrix& gamma) {
  const double n_a = gamma.ancilla_norm();
  if (!(n_a > 0.0)) throw InvariantError("weight matrix has vanishing N_a");
  std::vector<double> w(static_cast<std::size_t>(gamma.n()));
  for (long l = 0; l < gamma.n(); ++l)
    w[static_cast<std::size_t>(l)] = gamma.gamma(l, l).real() / n_a;
  return w;
}

void check_cat_inputs(const SlhTriple& G, const CoherentAmplitudes& amps, const WeightMatrix& gamma,
                      const HierarchyState& s, const char* what) {
  require_kind(s, HierarchyKind::cat, static_cast<int>(amps.size()), what);
  if (gamma.n() != s.n) throw DimensionError(std::string(what) + ": weight matrix", gamma.n(), s.n);
  if (G.dim() != s.dim()) throw DimensionError(what, G.dim(), s.dim());
  if (hermiticity_defect(gamma.gamma) > 1e-9)
    throw InvariantError(std::string(what) + ": weight matrix gamma is not Hermitian");
}

FilterState advance_bookkeeping(FilterState out, double record_inc, double innovation, double dt) {
  out.hierarchy.t += dt;
  out.last_innovation = innovation;
  out.record += record_inc;
  out.innovation_sum += innovation;
  return out;
}

// Weight of block (j, k) in the physical combination.
Eigen::MatrixXcd block_weights(HierarchyKind kind, const WeightMatrix& gamma) {
  return kind == HierarchyKind::photon ? Eigen::MatrixXcd(gamma.gamma.transpose()) : gamma.gamma;
}

}  // namespace

void MeasurementScheme::validate() const {
  if (!(intensity_floor > 0.0)) throw InvariantError("intensity floor must be positive");
}

FilterState make_filter_state(const FieldSpec& field, const Ket& eta, double t0) {
  FilterState s;
  s.hierarchy = initial_state(field, eta, t0);
  return s;
}

// ---------------------------------------------------------------------------
// Vacuum

Operator homodyne_backaction(const Operator& L, const Operator& rho) {
  require_same_dim(L, rho, "homodyne_backaction");
  const double k = ((L + L.adjoint()) * rho).trace().real();
  return L * rho + rho * L.adjoint() - k * rho;
}

double vacuum_counting_intensity(const Operator& L, const Operator& rho) {
  require_same_dim(L, rho, "vacuum_counting_intensity");
  return (rho * L.adjoint() * L).trace().real();
}

Operator vacuum_homodyne_step(const SlhTriple& G, const Operator& rho, double dW, double dt) {
  require_same_dim(G.L, rho, "vacuum_homodyne_step");
  const Cache c(G.S, G.L, G.H);
  Operator out = rho;
  detail::vacuum_homodyne_update(c, out, dW, dt);
  return out;
}

Operator vacuum_counting_step(const SlhTriple& G, const Operator& rho, int dN, double dt,
                              double floor) {
  require_same_dim(G.L, rho, "vacuum_counting_step");
  if (dN != 0 && dN != 1) throw InvariantError("vacuum_counting_step: dN must be 0 or 1");
  const Cache c(G.S, G.L, G.H);
  Operator out = rho;
  detail::vacuum_counting_update(c, out, dN, dt, floor);
  return out;
}

// ---------------------------------------------------------------------------
// Photon

double photon_homodyne_rate(const SlhTriple& G, Complex xi_t, const HierarchyState& state) {
  require_kind(state, HierarchyKind::photon, 2, "photon_homodyne_rate");
  const Cache c(G.S, G.L, G.H);
  return detail::photon_homodyne_rate(c, xi_t, blocks4(state));
}

double photon_counting_intensity(const SlhTriple& G, Complex xi_t, const HierarchyState& state) {
  require_kind(state, HierarchyKind::photon, 2, "photon_counting_intensity");
  const Cache c(G.S, G.L, G.H);
  return detail::photon_counting_intensity(c, xi_t, blocks4(state));
}

FilterState photon_homodyne_step(const SlhTriple& G, Complex xi_t, const FilterState& state,
                                 double dW, double dt) {
  require_kind(state.hierarchy, HierarchyKind::photon, 2, "photon_homodyne_step");
  if (G.dim() != state.hierarchy.dim())
    throw DimensionError("photon_homodyne_step", G.dim(), state.hierarchy.dim());
  const Cache c(G.S, G.L, G.H);
  FilterState out = state;
  const double k = detail::photon_homodyne_update(
      c, xi_t, std::span<Operator, 4>(out.hierarchy.blocks.data(), 4), dW, dt);
  return advance_bookkeeping(std::move(out), dW + k * dt, dW, dt);
}

FilterState photon_counting_step(const SlhTriple& G, Complex xi_t, const FilterState& state,
                                 int dN, double dt, double floor) {
  require_kind(state.hierarchy, HierarchyKind::photon, 2, "photon_counting_step");
  if (dN != 0 && dN != 1) throw InvariantError("photon_counting_step: dN must be 0 or 1");
  if (G.dim() != state.hierarchy.dim())
    throw DimensionError("photon_counting_step", G.dim(), state.hierarchy.dim());
  const Cache c(G.S, G.L, G.H);
  FilterState out = state;
  double nu = 0.0;
  try {
    nu = detail::photon_counting_update(
        c, xi_t, std::span<Operator, 4>(out.hierarchy.blocks.data(), 4), dN, dt, floor);
  } catch (const detail::VanishingIntensity& v) {
    std::ostringstream os;
    os << "count recorded at t = " << state.t() << " while the intensity " << v.intensity
       << " is below the floor (inconsistent record)";
    throw StepError(os.str(), 0);
  }
  return advance_bookkeeping(std::move(out), dN, dN - nu * dt, dt);
}

// ---------------------------------------------------------------------------
// Cat

double cat_homodyne_rate(const SlhTriple& G, const CoherentAmplitudes& amps,
                         const WeightMatrix& gamma, double t, const HierarchyState& state) {
  check_cat_inputs(G, amps, gamma, state, "cat_homodyne_rate");
  const Cache c(G.S, G.L, G.H);
  std::vector<Complex> alpha(amps.size());
  amps.values(t, alpha);
  const auto w = diag_weights(gamma);
  return detail::cat_homodyne_rate<Operator>(c, alpha, w, state.blocks);
}

double cat_counting_intensity(const SlhTriple& G, const CoherentAmplitudes& amps,
                              const WeightMatrix& gamma, double t, const HierarchyState& state) {
  check_cat_inputs(G, amps, gamma, state, "cat_counting_intensity");
  const Cache c(G.S, G.L, G.H);
  std::vector<Complex> alpha(amps.size());
  amps.values(t, alpha);
  const auto w = diag_weights(gamma);
  return detail::cat_counting_intensity<Operator>(c, alpha, w, state.blocks);
}

FilterState cat_homodyne_step(const SlhTriple& G, const CoherentAmplitudes& amps,
                              const WeightMatrix& gamma, double t, const FilterState& state,
                              double dW, double dt) {
  check_cat_inputs(G, amps, gamma, state.hierarchy, "cat_homodyne_step");
  const Cache c(G.S, G.L, G.H);
  std::vector<Complex> alpha(amps.size());
  amps.values(t, alpha);
  const auto w = diag_weights(gamma);
  FilterState out = state;
  const double k = detail::cat_homodyne_update<Operator>(c, alpha, w, out.hierarchy.blocks, dW, dt);
  return advance_bookkeeping(std::move(out), dW + k * dt, dW, dt);
}

FilterState cat_counting_step(const SlhTriple& G, const CoherentAmplitudes& amps,
                              const WeightMatrix& gamma, double t, const FilterState& state,
                              int dN, double dt, double floor) {
  check_cat_inputs(G, amps, gamma, state.hierarchy, "cat_counting_step");
  if (dN != 0 && dN != 1) throw InvariantError("cat_counting_step: dN must be 0 or 1");
  const Cache c(G.S, G.L, G.H);
  std::vector<Complex> alpha(amps.size());
  amps.values(t, alpha);
  const auto w = diag_weights(gamma);
  FilterState out = state;
  double nu = 0.0;
  try {
    nu = detail::cat_counting_update<Operator>(c, alpha, w, out.hierarchy.blocks, dN, dt, floor);
  } catch (const detail::VanishingIntensity& v) {
    std::ostringstream os;
    os << "count recorded at t = " << t << " while the intensity " << v.intensity
       << " is below the floor (inconsistent record)";
    throw StepError(os.str(), 0);
  }
  return advance_bookkeeping(std::move(out), dN, dN - nu * dt, dt);
}

// ---------------------------------------------------------------------------
// Conditional state

Operator conditional_combine(const WeightMatrix& gamma, const HierarchyState& state) {
  if (state.kind == HierarchyKind::vacuum) {
    const Operator& rho = state.blocks.at(0);
    const Complex tr = rho.trace();
    if (std::abs(tr) < 1e-12) throw InvariantError("conditional normalization collapse");
    return rho / tr;
  }
  if (gamma.n() != state.n)
    throw DimensionError("conditional_combine: weight matrix vs block count", gamma.n(), state.n);
  const Eigen::MatrixXcd w = block_weights(state.kind, gamma);
  Operator num = Operator::Zero(state.dim(), state.dim());
  Complex den{0.0, 0.0};
  for (int j = 0; j < state.n; ++j)
    for (int k = 0; k < state.n; ++k) {
      if (w(j, k) == Complex(0.0, 0.0)) continue;
      num += w(j, k) * state.block(j, k);
      den += w(j, k) * state.block(j, k).trace();
    }
  if (std::abs(den) < 1e-12) throw InvariantError("conditional normalization collapse");
  return num / den;
}

double predicted_record_rate(const SlhTriple& G, const FieldSpec& field, MeasurementKind kind,
                             double t, const HierarchyState& state) {
  const Cache c(G.S, G.L, G.H);
  const bool counting = kind == MeasurementKind::counting;
  if (state.kind == HierarchyKind::vacuum) {
    const Operator& rho = state.blocks.at(0);
    const Complex tr = rho.trace();
    const Complex v = counting ? (rho * c.LdL).trace() : (c.LpLd * rho).trace();
    return (v / tr).real();
  }
  if (const auto* p = std::get_if<PhotonCombination>(&field)) {
    require_kind(state, HierarchyKind::photon, 2, "predicted_record_rate");
    const Complex xi = p->xi(t);
    const auto tr = counting ? detail::photon_counting_linear_traces(c, xi, blocks4(state))
                             : detail::photon_homodyne_linear_traces(c, xi, blocks4(state));
    const Eigen::MatrixXcd w = block_weights(HierarchyKind::photon, p->gamma);
    return detail::weighted_record_rate<Operator>(w, state.blocks,
                                                  std::vector<Complex>(tr.begin(), tr.end()));
  }
  if (const auto* cc = std::get_if<CoherentCombination>(&field)) {
    require_kind(state, HierarchyKind::cat, static_cast<int>(cc->amps.size()),
                 "predicted_record_rate");
    const std::size_t n = cc->amps.size();
    std::vector<Complex> alpha(n);
    cc->amps.values(t, alpha);
    std::vector<Complex> tr(n * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const Operator& rho = state.blocks[j * n + k];
        tr[j * n + k] = counting ? detail::cat_counting_linear_trace(c, alpha[j], alpha[k], rho)
                                 : detail::cat_homodyne_linear_trace(c, alpha[j], alpha[k], rho);
      }
    return detail::weighted_record_rate<Operator>(cc->gamma.gamma, state.blocks, tr);
  }
  throw InvariantError("predicted_record_rate: field does not match the state");
}

}  // namespace qtraj
