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

// Small helpers shared by the unit tests.

#pragma once

#include <cstdint>
#include <random>

#include "qtraj/operator_algebra.hpp"

namespace qtraj::test {

inline double max_abs(const Operator& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }
inline double max_diff(const Operator& a, const Operator& b) { return max_abs(a - b); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return n_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(gen_); }

  Operator matrix(long d) {
    Operator a(d, d);
    for (long i = 0; i < d; ++i)
      for (long j = 0; j < d; ++j) a(i, j) = Complex(normal(), normal());
    return a;
  }
  Operator hermitian(long d) {
    Operator a = matrix(d);
    return 0.5 * (a + a.adjoint());
  }
  /// Random full-rank density operator.
  Operator density(long d) {
    Operator a = matrix(d);
    Operator r = a * a.adjoint();
    return r / r.trace();
  }
  Operator unitary(long d) {
    Eigen::HouseholderQR<Operator> qr(matrix(d));
    return qr.householderQ();
  }
  Ket ket(long d) {
    Ket k(d);
    for (long i = 0; i < d; ++i) k(i) = Complex(normal(), normal());
    return k.normalized();
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<> n_;
};

}  // namespace qtraj::test
