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

#include "qtraj/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qtraj/error.hpp"

namespace qtraj {

namespace {

std::vector<double> panel_edges(double a, double b, std::span<const double> breakpoints) {
  // Breakpoints within round-off of an end would create degenerate panels
  // whose error estimates are meaningless.
  const double guard = 1e-9 * (b - a);
  std::vector<double> edges{a};
  for (double p : breakpoints)
    if (p > a + guard && p < b - guard) edges.push_back(p);
  std::sort(edges.begin() + 1, edges.end());
  edges.push_back(b);
  return edges;
}

double integrate_panel(const std::function<double(double)>& f, double a, double b,
                       const QuadratureOptions& opts, double& err_sum, double& l1_sum) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, opts.max_depth, opts.rel_tol, &err, &l1);
  err_sum += err;
  l1_sum += l1;
  return v;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, const QuadratureOptions& opts) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, breakpoints, opts);
  const auto edges = panel_edges(a, b, breakpoints);
  double total = 0.0;
  double err = 0.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] > edges[i]) total += integrate_panel(f, edges[i], edges[i + 1], opts, err, l1);
  }
  if (!std::isfinite(total) || (err > opts.rel_tol * l1 && err > opts.abs_tol))
    throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "]",
                          err);
  return total;
}

std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& f,
                                       double a, double b, std::span<const double> breakpoints,
                                       const QuadratureOptions& opts) {
  const double re = integrate([&](double t) { return f(t).real(); }, a, b, breakpoints, opts);
  const double im = integrate([&](double t) { return f(t).imag(); }, a, b, breakpoints, opts);
  return {re, im};
}

}  // namespace qtraj
