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

#include "qtraj/time_grid.hpp"

#include "qtraj/error.hpp"

namespace qtraj {

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvariantError("time grid: dt must be positive");
  if (!(t1 > t0)) throw InvariantError("time grid: t1 must exceed t0");
  if (steps() == 0) throw InvariantError("time grid: horizon shorter than one step");
}

}  // namespace qtraj
