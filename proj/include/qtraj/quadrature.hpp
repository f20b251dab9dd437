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

// Adaptive Gauss-Kronrod quadrature on finite intervals, split at optional
// breakpoints (kinks of tabulated or windowed functions).

#pragma once

#include <complex>
#include <functional>
#include <span>

namespace qtraj {

struct QuadratureOptions {
  double rel_tol = 1e-8;
  /// Absolute floor below which the error estimate is always accepted.
  double abs_tol = 1e-13;
  unsigned max_depth = 18;
};

/// Integral of f over [a, b]. Throws QuadratureError with the residual
/// estimate when the tolerance is not met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints = {}, const QuadratureOptions& opts = {});

std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& f,
                                       double a, double b, std::span<const double> breakpoints = {},
                               const QuadratureOptions& opts = {});

}  // namespace qtraj
