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
#include <cstddef>

namespace qtraj {

/// Uniform grid t_i = t0 + i dt, i = 0..steps(). The step count is the
/// nearest integer to (t1 - t0) / dt.
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;

  std::size_t steps() const noexcept {
    return static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  }
  double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }

  /// Throws InvariantError for dt <= 0, t1 <= t0, or a zero step count.
  void validate() const;
};

}  // namespace qtraj
