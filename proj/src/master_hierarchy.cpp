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

#include "qtraj/master_hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "qtraj/detail/kernels.hpp"
#include "qtraj/error.hpp"

namespace qtraj {

namespace {

using Cache = detail::SystemCache<Operator>;

constexpr double kTraceTol = 1e-7;
constexpr double kPairingTol = 1e-8;

const char* kind_name(HierarchyKind k) {
  switch (k) {
    case HierarchyKind::vacuum: return "vacuum";
    case HierarchyKind::photon: return "photon";
    case HierarchyKind::cat: return "cat";
  }
  return "?";
}

void require_blocks(const HierarchyState& s, HierarchyKind kind, const char* what) {
  if (s.kind != kind)
    throw InvariantError(std::string(what) + ": expected a " + kind_name(kind) + " state, got " +
                         kind_name(s.kind));
  if (s.blocks.size() != static_cast<std::size_t>(s.n * s.n))
    throw DimensionError(std::string(what) + ": block count", static_cast<long>(s.blocks.size()),
                         s.n * s.n);
  if (kind == HierarchyKind::photon && s.n != 2)
    throw DimensionError(std::string(what) + ": photon hierarchy needs 2x2 blocks", s.n, 2);
}

void require_system_dim(const SlhTriple& G, const HierarchyState& s, const char* what) {
  if (G.dim() != s.dim()) throw DimensionError(what, G.dim(), s.dim());
}

HierarchyState zero_like(const HierarchyState& s) {
  HierarchyState out;
  out.kind = s.kind;
  out.n = s.n;
  out.t = s.t;
  out.blocks.assign(s.blocks.size(), Operator::Zero(s.dim(), s.dim()));
  return out;
}

HierarchyState photon_rhs_cached(const Cache& c, Complex xi, const HierarchyState& s) {
  HierarchyState out = zero_like(s);
  detail::photon_drift<Operator>(c, xi, std::span<const Operator, 4>(s.blocks.data(), 4),
                                 std::span<Operator, 4>(out.blocks.data(), 4));
  return out;
}

HierarchyState cat_rhs_cached(const Cache& c, std::span<const Complex> alpha,
                              const HierarchyState& s) {
  HierarchyState out = zero_like(s);
  const int n = s.n;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      out.block(j, k) = detail::cat_drift<Operator>(c, alpha[j], alpha[k], s.block(j, k));
  return out;
}

// y + h * k, blockwise
HierarchyState axpy(const HierarchyState& y, double h, const HierarchyState& k) {
  HierarchyState out = y;
  for (std::size_t i = 0; i < out.blocks.size(); ++i) out.blocks[i] += h * k.blocks[i];
  return out;
}

std::vector<Complex> block_traces(const HierarchyState& s) {
  std::vector<Complex> tr(s.blocks.size());
  for (std::size_t i = 0; i < s.blocks.size(); ++i) tr[i] = s.blocks[i].trace();
  return tr;
}

// tr_anc{(A (x) I_d) rho} for rho on anc (x) system.
Operator weighted_partial_trace(const Operator& A, const Operator& rho, long d) {
  const long na = A.rows();
  Operator out = Operator::Zero(d, d);
  for (long a = 0; a < na; ++a)
    for (long b = 0; b < na; ++b)
      if (A(a, b) != Complex(0.0, 0.0)) out += A(a, b) * rho.block(b * d, a * d, d, d);
  return out;
}

// Joint ME generator of (embedded G) <| M(t) with M = (I, coeff(t) * Lm, 0).
// L_T = L_s + c(t) S_s Lm, H_T = H_s + Im{c(t) L_s^dag S_s Lm}.
struct CascadeGenerator {
  Operator Ls, Hs, SLm, LdSLm;
  Cache cache;

  CascadeGenerator(const SlhTriple& Gs, const Operator& Lm) {
    Ls = Gs.L;
    Hs = Gs.H;
    SLm = Gs.S * Lm;
    LdSLm = Gs.L.adjoint() * SLm;
    cache.reset(Gs.S, Gs.L, Gs.H);
  }

  // Diagonal generator with one coupling per ancilla level.
  void set(Complex c) {
    cache.reset_coupling(Operator(Ls + c * SLm), Operator(Hs + im_part(c * LdSLm)));
  }

  void set_operator(const Operator& Lm_t, const Operator& S) {
    const Operator sl = S * Lm_t;
    cache.reset_coupling(Operator(Ls + sl), Operator(Hs + im_part(Ls.adjoint() * sl)));
  }

  Operator rhs(const Operator& rho) const { return detail::liouvillian(cache, rho); }
};

}  // namespace

// ---------------------------------------------------------------------------
// Initial states

HierarchyState vacuum_initial_state(const Operator& rho0, double t0) {
  HierarchyState s;
  s.kind = HierarchyKind::vacuum;
  s.n = 1;
  s.t = t0;
  s.blocks = {rho0};
  return s;
}

HierarchyState photon_initial_state(const Ket& eta, double t0) {
  const Operator p = projector(eta);
  HierarchyState s;
  s.kind = HierarchyKind::photon;
  s.n = 2;
  s.t = t0;
  s.blocks = {p, Operator::Zero(p.rows(), p.cols()), Operator::Zero(p.rows(), p.cols()), p};
  return s;
}

HierarchyState cat_initial_state(const Ket& eta, const Eigen::MatrixXcd& gram, double t0) {
  const Operator p = projector(eta);
  HierarchyState s;
  s.kind = HierarchyKind::cat;
  s.n = static_cast<int>(gram.rows());
  s.t = t0;
  s.blocks.reserve(static_cast<std::size_t>(s.n * s.n));
  for (int j = 0; j < s.n; ++j)
    for (int k = 0; k < s.n; ++k) s.blocks.push_back(gram(j, k) * p);
  return s;
}

HierarchyState initial_state(const FieldSpec& field, const Ket& eta, double t0) {
  if (std::holds_alternative<PhotonCombination>(field)) return photon_initial_state(eta, t0);
  if (const auto* c = std::get_if<CoherentCombination>(&field))
    return cat_initial_state(eta, c->gram, t0);
  return vacuum_initial_state(projector(eta), t0);
}

// ---------------------------------------------------------------------------
// Right-hand sides

Operator vacuum_me_rhs(const SlhTriple& G, const Operator& rho) {
  require_same_dim(G.L, rho, "vacuum_me_rhs");
  return liouvillian(G, rho);
}

HierarchyState photon_hierarchy_rhs(const SlhTriple& G, Complex xi_t, const HierarchyState& state) {
  require_blocks(state, HierarchyKind::photon, "photon_hierarchy_rhs");
  require_system_dim(G, state, "photon_hierarchy_rhs");
  const Cache c(G.S, G.L, G.H);
  return photon_rhs_cached(c, xi_t, state);
}

HierarchyState cat_hierarchy_rhs(const SlhTriple& G, const CoherentAmplitudes& amps, double t,
                                 const HierarchyState& state) {
  require_blocks(state, HierarchyKind::cat, "cat_hierarchy_rhs");
  require_system_dim(G, state, "cat_hierarchy_rhs");
  if (static_cast<std::size_t>(state.n) != amps.size())
    throw DimensionError("cat_hierarchy_rhs: amplitude count", static_cast<long>(amps.size()),
                         state.n);
  const Cache c(G.S, G.L, G.H);
  std::vector<Complex> alpha(amps.size());
  amps.values(t, alpha);
  return cat_rhs_cached(c, alpha, state);
}

HierarchyRhs make_hierarchy_rhs(const SlhTriple& G, const FieldSpec& field) {
  G.validate();
  auto cache = std::make_shared<const Cache>(G.S, G.L, G.H);
  if (const auto* p = std::get_if<PhotonCombination>(&field)) {
    ComplexFn xi = p->xi.function();
    return [cache, xi](double t, const HierarchyState& s) {
      require_blocks(s, HierarchyKind::photon, "photon hierarchy");
      return photon_rhs_cached(*cache, xi(t), s);
    };
  }
  if (const auto* c = std::get_if<CoherentCombination>(&field)) {
    CoherentAmplitudes amps = c->amps;
    return [cache, amps](double t, const HierarchyState& s) {
      require_blocks(s, HierarchyKind::cat, "cat hierarchy");
      std::vector<Complex> alpha(amps.size());
      amps.values(t, alpha);
      return cat_rhs_cached(*cache, alpha, s);
    };
  }
  return [cache](double, const HierarchyState& s) {
    require_blocks(s, HierarchyKind::vacuum, "vacuum master equation");
    HierarchyState out = zero_like(s);
    out.blocks[0] = detail::liouvillian(*cache, s.blocks[0]);
    return out;
  };
}

// ---------------------------------------------------------------------------
// Propagation

HierarchyDeviation hierarchy_deviation(const HierarchyState& state,
                                       const std::vector<Complex>& target_traces) {
  HierarchyDeviation dev;
  for (std::size_t i = 0; i < state.blocks.size() && i < target_traces.size(); ++i)
    dev.trace = std::max(dev.trace, std::abs(state.blocks[i].trace() - target_traces[i]));
  for (int j = 0; j < state.n; ++j)
    for (int k = j; k < state.n; ++k) {
      const double d = (state.block(j, k).adjoint() - state.block(k, j)).cwiseAbs().maxCoeff();
      dev.pairing = std::max(dev.pairing, d);
    }
  return dev;
}

void propagate_rk4(HierarchyState& state, const HierarchyRhs& rhs, double dt, std::size_t steps,
                   const HierarchyObserver& observer, bool check_invariants) {
  if (!(dt > 0.0)) throw InvariantError("propagate_rk4: dt must be positive");
  const std::vector<Complex> targets = block_traces(state);
  const double t_start = state.t;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = t_start + static_cast<double>(i) * dt;
    state.t = t;
    const HierarchyState k1 = rhs(t, state);
    const HierarchyState k2 = rhs(t + 0.5 * dt, axpy(state, 0.5 * dt, k1));
    const HierarchyState k3 = rhs(t + 0.5 * dt, axpy(state, 0.5 * dt, k2));
    const HierarchyState k4 = rhs(t + dt, axpy(state, dt, k3));
    for (std::size_t b = 0; b < state.blocks.size(); ++b)
      state.blocks[b] +=
          (dt / 6.0) * (k1.blocks[b] + 2.0 * k2.blocks[b] + 2.0 * k3.blocks[b] + k4.blocks[b]);
    state.t = t_start + static_cast<double>(i + 1) * dt;
    if (check_invariants) {
      const HierarchyDeviation dev = hierarchy_deviation(state, targets);
      if (dev.trace > kTraceTol || dev.pairing > kPairingTol) {
        std::ostringstream os;
        os << "step " << (i + 1) << " (t = " << state.t << "): hierarchy invariant violated"
           << " (trace deviation " << dev.trace << ", pairing deviation " << dev.pairing << ")";
        throw InvariantError(os.str());
      }
    }
    if (observer) observer(state, i + 1);
  }
}

Operator combine_unconditional(const WeightMatrix& gamma, const HierarchyState& state) {
  if (state.kind == HierarchyKind::vacuum) return state.blocks.at(0);
  if (gamma.n() != state.n)
    throw DimensionError("combine_unconditional: weight matrix vs block count", gamma.n(), state.n);
  Operator rho = Operator::Zero(state.dim(), state.dim());
  for (int j = 0; j < state.n; ++j)
    for (int k = 0; k < state.n; ++k) {
      const Complex w = state.kind == HierarchyKind::photon ? gamma.gamma(k, j) : gamma.gamma(j, k);
      if (w != Complex(0.0, 0.0)) rho += w * state.block(j, k);
    }
  assert_density(rho, 1.0, "combine_unconditional", kTraceTol);
  return rho;
}

Complex block_expectation(const HierarchyState& state, int j, int k, const Operator& X) {
  if (j < 0 || k < 0 || j >= state.n || k >= state.n)
    throw IndexError("block_expectation: block index out of range");
  const Operator& b = state.block(j, k);
  require_same_dim(b, X, "block_expectation");
  if (state.kind == HierarchyKind::photon) return (b.adjoint() * X).trace();
  return (b * X).trace();
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

std::vector<OracleSample> photon_oracle(const SlhTriple& G, const PhotonCombination& field,
                                        const Ket& eta, const TimeGrid& grid,
                                        const OracleOptions& opts) {
  const long d = G.dim();
  const auto tl = preset_two_level();
  const SlhTriple Gs = embed(G, Slot::right, 2);
  const Operator Lm = embed(tl.sigma_minus, Slot::left, d);
  CascadeGenerator gen(Gs, Lm);
  const Wavepacket& xi = field.xi;
  const double t0 = grid.t0;
  const double dt = grid.dt;

  // Survival anchored at the start of the run: w(t) = 1 - integral_{t0}^t |xi|^2.
  // This is the generator population the hierarchy implicitly assumes.
  auto lambda = [&](double t, double w) { return xi(t) / std::sqrt(std::max(w, kLambdaEps)); };

  Operator rho = kron(projector(excited_ket()), projector(eta));
  const Operator Q[4] = {tl.excited, tl.sigma_plus, tl.sigma_minus, tl.identity};

  std::vector<OracleSample> out;
  auto sample = [&](double t, double w) {
    OracleSample s;
    s.t = t;
    s.blocks.kind = HierarchyKind::photon;
    s.blocks.n = 2;
    s.blocks.t = t;
    s.blocks.blocks.resize(4);
    s.valid.resize(4);
    const double wjk[4] = {w, std::sqrt(std::max(w, 0.0)), std::sqrt(std::max(w, 0.0)), 1.0};
    for (int b = 0; b < 4; ++b) {
      s.valid[b] = wjk[b] >= opts.w_threshold;
      const Operator B = weighted_partial_trace(Q[b], rho, d);
      s.blocks.blocks[b] = s.valid[b] ? Operator((B / wjk[b]).adjoint()) : Operator::Zero(d, d);
    }
    out.push_back(std::move(s));
  };

  double w = 1.0;
  sample(t0, w);
  const std::size_t steps = grid.steps();
  const std::size_t stride = std::max<std::size_t>(1, opts.sample_stride);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = grid.time(i);
    const double w_half = w - xi.mass(t, t + 0.5 * dt);
    const double w_full = w_half - xi.mass(t + 0.5 * dt, t + dt);
    gen.set(lambda(t, w));
    const Operator k1 = gen.rhs(rho);
    gen.set(lambda(t + 0.5 * dt, w_half));
    const Operator k2 = gen.rhs(rho + 0.5 * dt * k1);
    const Operator k3 = gen.rhs(rho + 0.5 * dt * k2);
    gen.set(lambda(t + dt, w_full));
    const Operator k4 = gen.rhs(rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    w = w_full;
    if ((i + 1) % stride == 0 || i + 1 == steps) sample(grid.time(i + 1), w);
  }
  return out;
}

std::vector<OracleSample> cat_oracle(const SlhTriple& G, const CoherentCombination& field,
                                     const Ket& eta, const TimeGrid& grid,
                                     const OracleOptions& opts) {
  const long d = G.dim();
  const int n = static_cast<int>(field.amps.size());
  const SlhTriple Gs = embed(G, Slot::right, n);
  const Operator S_id = Gs.S;
  CascadeGenerator gen(Gs, Operator::Zero(n * d, n * d));
  const Eigen::MatrixXcd& gamma = field.gamma.gamma;
  const double n_a = field.gamma.ancilla_norm();
  const double t0 = grid.t0;
  const double dt = grid.dt;
  const auto& amps = field.amps;

  // rho_a = (1/N_a) sum gamma_kj |j><k|
  const Operator rho_a = gamma.transpose() / n_a;
  Operator rho = kron(rho_a, projector(eta));

  auto set_generator = [&](double t) {
    Operator Lm = Operator::Zero(n, n);
    for (int j = 0; j < n; ++j) Lm(j, j) = amps(j, t);
    gen.set_operator(embed(Lm, Slot::left, d), S_id);
  };

  // Running exponent integral_{t0}^t m_jk.
  Eigen::MatrixXcd expo = Eigen::MatrixXcd::Zero(n, n);
  std::vector<OracleSample> out;
  auto sample = [&](double t) {
    OracleSample s;
    s.t = t;
    s.blocks.kind = HierarchyKind::cat;
    s.blocks.n = n;
    s.blocks.t = t;
    s.blocks.blocks.resize(static_cast<std::size_t>(n * n));
    s.valid.resize(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const std::size_t b = static_cast<std::size_t>(j * n + k);
        const Complex g = field.gram(j, k);
        const Complex wjk = std::abs(g) > 1e-12 ? std::exp(expo(j, k)) / (n_a * g) : Complex(0.0);
        const Complex scale = gamma(j, k) * wjk;
        s.valid[b] = std::abs(scale) >= opts.w_threshold;
        // tr_anc{(|j><k| (x) I) rho} is the (k, j) ancilla block.
        s.blocks.blocks[b] =
            s.valid[b] ? Operator(rho.block(k * d, j * d, d, d) / scale) : Operator::Zero(d, d);
      }
    out.push_back(std::move(s));
  };

  sample(t0);
  const std::size_t steps = grid.steps();
  const std::size_t stride = std::max<std::size_t>(1, opts.sample_stride);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = grid.time(i);
    set_generator(t);
    const Operator k1 = gen.rhs(rho);
    set_generator(t + 0.5 * dt);
    const Operator k2 = gen.rhs(rho + 0.5 * dt * k1);
    const Operator k3 = gen.rhs(rho + 0.5 * dt * k2);
    set_generator(t + dt);
    const Operator k4 = gen.rhs(rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const Complex inc = integrate_complex(
            [&](double u) { return cat_mjk(amps, static_cast<std::size_t>(j),
                                           static_cast<std::size_t>(k), u); },
            t, t + dt, amps.breakpoints());
        expo(j, k) += inc;
        expo(k, j) += std::conj(inc);
      }
    if ((i + 1) % stride == 0 || i + 1 == steps) sample(grid.time(i + 1));
  }
  return out;
}

}  // namespace

std::vector<OracleSample> oracle_extended_me(const SlhTriple& G, const FieldSpec& field,
                                             const Ket& eta, const TimeGrid& grid,
                                             const OracleOptions& opts) {
  G.validate();
  grid.validate();
  if (eta.size() != G.dim()) throw DimensionError("oracle: initial state", eta.size(), G.dim());
  if (const auto* p = std::get_if<PhotonCombination>(&field))
    return photon_oracle(G, *p, eta, grid, opts);
  if (const auto* c = std::get_if<CoherentCombination>(&field))
    return cat_oracle(G, *c, eta, grid, opts);
  throw InvariantError("oracle requires a photon or coherent field");
}

OracleReport oracle_check(const SlhTriple& G, const FieldSpec& field, const Ket& eta,
                          const TimeGrid& grid, const OracleOptions& opts, double tolerance,
                          const HierarchyRhs* hierarchy_override) {
  const std::vector<OracleSample> oracle = oracle_extended_me(G, field, eta, grid, opts);
  const HierarchyRhs rhs = hierarchy_override ? *hierarchy_override : make_hierarchy_rhs(G, field);
  HierarchyState state = initial_state(field, eta, grid.t0);

  OracleReport rep;
  rep.tolerance = tolerance;
  rep.block_max.assign(state.blocks.size(), 0.0);
  std::size_t next = 0;
  auto compare = [&](const HierarchyState& s) {
    while (next < oracle.size() && oracle[next].t < s.t - 0.5 * grid.dt) ++next;
    if (next >= oracle.size() || std::abs(oracle[next].t - s.t) > 0.5 * grid.dt) return;
    const OracleSample& o = oracle[next++];
    ++rep.samples;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      if (!o.valid[b]) {
        ++rep.invalid_points;
        if (std::isnan(rep.first_invalid_t)) rep.first_invalid_t = o.t;
        continue;
      }
      ++rep.valid_points;
      const double dev = (s.blocks[b] - o.blocks.blocks[b]).cwiseAbs().maxCoeff();
      rep.block_max[b] = std::max(rep.block_max[b], dev);
      rep.max_deviation = std::max(rep.max_deviation, std::isnan(dev) ? INFINITY : dev);
    }
  };
  compare(state);
  // Faulty fixtures may break the pairing invariant; the deviation report is
  // what matters here.
  propagate_rk4(state, rhs, grid.dt, grid.steps(),
                [&](const HierarchyState& s, std::size_t) { compare(s); },
                hierarchy_override == nullptr && invariant_checks_enabled());
  rep.passed = rep.valid_points > 0 && rep.max_deviation <= tolerance;
  return rep;
}

}  // namespace qtraj
