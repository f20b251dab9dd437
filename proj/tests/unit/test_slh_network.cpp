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

#include <doctest.h>

#include "qtraj/error.hpp"
#include "qtraj/field_states.hpp"
#include "qtraj/slh_network.hpp"
#include "support.hpp"

using namespace qtraj;
using test::max_abs;
using test::max_diff;

namespace {

SlhTriple random_triple(test::Rng& rng, long d) {
  return SlhTriple::make(rng.unitary(d), rng.matrix(d), rng.hermitian(d));
}

double triple_diff(const SlhTriple& a, const SlhTriple& b) {
  return std::max({max_diff(a.S, b.S), max_diff(a.L, b.L), max_diff(a.H, b.H)});
}

}  // namespace

TEST_CASE("identity pass-through") {
  test::Rng rng(10);
  const SlhTriple g = random_triple(rng, 3);
  const SlhTriple id = SlhTriple::make(Operator::Identity(3, 3), Operator::Zero(3, 3),
                                       Operator::Zero(3, 3));
  CHECK(triple_diff(series_product(id, g), g) < 1e-14);
  CHECK(triple_diff(series_product(g, id), g) < 1e-14);
}

TEST_CASE("scalar phases compose") {
  const double p1 = 0.3, p2 = -1.1;
  const Operator z = Operator::Zero(2, 2);
  const SlhTriple g1 = SlhTriple::make(std::exp(kI * p1) * Operator::Identity(2, 2), z, z);
  const SlhTriple g2 = SlhTriple::make(std::exp(kI * p2) * Operator::Identity(2, 2), z, z);
  const SlhTriple g = series_product(g2, g1);
  CHECK(max_diff(g.S, std::exp(kI * (p1 + p2)) * Operator::Identity(2, 2)) < 1e-15);
}

TEST_CASE("operator ordering of the series product") {
  test::Rng rng(11);
  const SlhTriple g1 = random_triple(rng, 3);
  const SlhTriple g2 = random_triple(rng, 3);
  const SlhTriple g = series_product(g2, g1);
  CHECK(max_diff(g.S, g2.S * g1.S) < 1e-14);
  CHECK(max_diff(g.L, g2.L + g2.S * g1.L) < 1e-14);
  const Operator x = g2.L.adjoint() * g2.S * g1.L;
  CHECK(max_diff(g.H, g1.H + g2.H + (x - x.adjoint()) / (2.0 * kI)) < 1e-13);
}

TEST_CASE("extended photon system as a cascade") {
  // System G on the right factor, signal generator (I, lambda sigma_-, 0) on
  // the ancilla (left) factor.
  const auto tl = preset_two_level();
  test::Rng rng(12);
  const long d = 3;
  const SlhTriple g = random_triple(rng, d);
  const Wavepacket xi = gaussian_wavepacket(1.46, 3.0);

  TimedSlhTriple m;
  m.S = tl.identity;
  m.dim = 2;
  m.L = [&](double t) -> Operator { return generator_coupling_lambda(xi, t) * tl.sigma_minus; };
  m.H = [](double) -> Operator { return Operator::Zero(2, 2); };

  const TimedSlhTriple ext = series_product(embed(g, Slot::right, 2), embed(m, Slot::left, d));
  const Operator S = embed(g.S, Slot::right, 2);
  const Operator L = embed(g.L, Slot::right, 2);
  const Operator H = embed(g.H, Slot::right, 2);
  const Operator sm = embed(tl.sigma_minus, Slot::left, d);
  for (double t : {0.5, 2.0, 3.0, 4.2}) {
    const Complex lam = xi(t) / std::sqrt(survival_w(xi, t));
    const SlhTriple e = ext.at(t);
    CHECK(max_diff(e.S, S) < 1e-14);
    CHECK(max_diff(e.L, L + lam * S * sm) < 1e-12);
    const Operator x = L.adjoint() * S * sm;
    CHECK(max_diff(e.H, H + lam * (x - x.adjoint()) / (2.0 * kI)) < 1e-12);
    CHECK(is_unitary(e.S));
    CHECK(is_hermitian(e.H));
  }
}

TEST_CASE("embedding") {
  const auto tl = preset_two_level();
  const Operator e = embed(tl.sigma_minus, Slot::left, 2);
  REQUIRE(e.rows() == 4);
  CHECK(max_diff(e, kron(tl.sigma_minus, tl.identity)) == 0.0);
  CHECK(e(0, 2) == Complex(1.0, 0.0));
  CHECK(e(1, 3) == Complex(1.0, 0.0));
  CHECK(max_diff(embed(Operator::Identity(3, 3), Slot::left, 2), Operator::Identity(6, 6)) == 0.0);
  CHECK(max_diff(embed(Operator::Identity(3, 3), Slot::right, 2), Operator::Identity(6, 6)) == 0.0);
  CHECK_THROWS_AS(embed(tl.identity, Slot::left, 0), DimensionError);

  test::Rng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const Operator a = rng.matrix(2), b = rng.matrix(2);
    CHECK(max_diff(embed(a, Slot::left, 2) * embed(b, Slot::right, 2), kron(a, b)) < 1e-13);
  }
}

TEST_CASE("series product preserves unitarity and Hermiticity") {
  test::Rng rng(14);
  for (long d : {1, 2, 4, 7}) {
    for (int rep = 0; rep < 10; ++rep) {
      const SlhTriple g = series_product(random_triple(rng, d), random_triple(rng, d));
      CHECK(unitarity_defect(g.S) <= 1e-9);
      CHECK(hermiticity_defect(g.H) <= 1e-9);
    }
  }
}

TEST_CASE("series product is associative") {
  test::Rng rng(15);
  for (long d : {2, 3, 5}) {
    const SlhTriple g1 = random_triple(rng, d), g2 = random_triple(rng, d),
                    g3 = random_triple(rng, d);
    const SlhTriple lhs = series_product(series_product(g3, g2), g1);
    const SlhTriple rhs = series_product(g3, series_product(g2, g1));
    CHECK(triple_diff(lhs, rhs) <= 1e-10);
  }
}

TEST_CASE("validation errors") {
  const Operator id = Operator::Identity(2, 2), z = Operator::Zero(2, 2);
  CHECK_THROWS_AS(SlhTriple::make(2.0 * id, z, z), InvariantError);
  Operator h = z;
  h(0, 1) = 1.0;
  CHECK_THROWS_AS(SlhTriple::make(id, z, h), InvariantError);
  CHECK_THROWS_AS(SlhTriple::make(id, Operator::Zero(3, 3), z), DimensionError);
  const SlhTriple bad{2.0 * id, z, z};
  const SlhTriple ok = SlhTriple::make(id, z, z);
  CHECK_THROWS_AS(series_product(bad, ok), InvariantError);
  CHECK_THROWS_AS(series_product(ok, SlhTriple::make(Operator::Identity(3, 3),
                                                     Operator::Zero(3, 3), Operator::Zero(3, 3))),
                  DimensionError);
}

TEST_CASE("timed triples sample their closures") {
  const auto tl = preset_two_level();
  TimedSlhTriple g;
  g.S = tl.identity;
  g.dim = 2;
  g.L = [&](double t) -> Operator { return t * tl.sigma_minus; };
  g.H = [&](double t) -> Operator { return t * tl.excited; };
  const SlhTriple at = g.at(2.5);
  CHECK(max_diff(at.L, 2.5 * tl.sigma_minus) == 0.0);
  CHECK(max_diff(at.H, 2.5 * tl.excited) == 0.0);
  const SlhTriple c = SlhTriple::make(tl.identity, tl.sigma_minus, Operator::Zero(2, 2));
  const TimedSlhTriple k = TimedSlhTriple::constant(c);
  CHECK(max_diff(k.at(7.0).L, c.L) == 0.0);
}
