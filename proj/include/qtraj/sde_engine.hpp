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

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qtraj/filter_hierarchy.hpp"
#include "qtraj/time_grid.hpp"

namespace qtraj {

// ---------------------------------------------------------------------------
// Random streams

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Counter-based stream for trajectory `index` of an ensemble seeded with
/// `seed`. Every draw consumes one Philox block; the block for draw number n
/// depends only on (seed, index, n).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t index, std::uint64_t counter = 0) noexcept
      : seed_(seed), index_(index), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t index() const noexcept { return index_; }
  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

  /// Block for the current counter; advances the counter.
  PhiloxCounter next_block() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform() noexcept;
  /// Standard normal (Box-Muller, one block per draw).
  double next_normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t counter_;
};

/// sqrt(dt) * N(0, 1). Throws InvariantError for dt <= 0.
double gaussian_increment(NoiseStream& stream, double dt);

/// 1 with probability intensity * dt, else 0. Always consumes one draw.
/// Throws InvariantError when intensity < 0 or intensity * dt > 0.1.
int bernoulli_jump(NoiseStream& stream, double intensity, double dt);

inline constexpr double kMaxJumpProbability = 0.1;

// ---------------------------------------------------------------------------
// Trajectories

struct InvariantDeviation {
  /// Worst |tr - target| over the traced blocks and the conditional state.
  double trace = 0.0;
  /// Worst ||rho^{jk}^dag - rho^{kj}||.
  double pairing = 0.0;
};

/// A conditional filter driven by a measurement record.
class TrajectoryModel {
 public:
  virtual ~TrajectoryModel() = default;

  virtual MeasurementKind scheme() const = 0;
  virtual std::vector<std::string> observable_names() const = 0;

  /// Back to the initial conditional state at time t0.
  virtual void reset(double t0) = 0;
  /// Expected dY / dt (homodyne) or click intensity (counting) at time t
  /// under the physical field law, given the current conditional state.
  virtual double record_rate(double t) const = 0;
  /// Advance over [t, t + dt] with record increment dY.
  virtual void advance(double t, double dt, double dY) = 0;
  /// Observable expectations in the normalized conditional state.
  virtual void observe(std::span<double> out) const = 0;
  virtual InvariantDeviation invariant_deviation() const = 0;
};

struct TrajectoryOptions {
  /// Sample every `record_stride` steps; dY and innovation are summed over
  /// each window.
  std::size_t record_stride = 1;
  bool check_invariants = invariant_checks_enabled();
  double trace_tol = 1e-7;
  double pairing_tol = 1e-8;
};

struct TrajectoryRecord {
  TimeGrid grid;
  std::size_t stride = 1;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  MeasurementKind scheme = MeasurementKind::homodyne;

  std::vector<double> times;
  /// Record increment over the window ending at times[i] (0 at i = 0).
  std::vector<double> dY;
  /// dY minus the predicted compensator over the same window.
  std::vector<double> innovation;
  /// Running sums of dY and innovation.
  std::vector<double> Y;
  std::vector<double> W;

  std::vector<std::string> names;
  /// observables[o][i] is observable o at times[i].
  std::vector<std::vector<double>> observables;

  InvariantDeviation max_deviation;

  std::size_t size() const noexcept { return times.size(); }
  /// Throws IndexError for an unknown name.
  const std::vector<double>& series(const std::string& name) const;
};

/// Sample points of a grid under a stride (always including both ends).
std::vector<std::size_t> sample_steps(const TimeGrid& grid, std::size_t stride);

/// Runs one trajectory. The model is reset to grid.t0 first. Homodyne
/// records are dY = K dt + dW with dW ~ N(0, dt); counting records are
/// Bernoulli(nu dt). Failures are rethrown as StepError with the step index.
TrajectoryRecord run_trajectory(TrajectoryModel& model, const TimeGrid& grid, NoiseStream& stream,
                                const TrajectoryOptions& opts = {});

// ---------------------------------------------------------------------------
// Ensembles

using ModelFactory = std::function<std::unique_ptr<TrajectoryModel>()>;

struct EnsembleOptions {
  std::uint64_t seed = 0;
  std::size_t trajectories = 1;
  unsigned parallelism = 1;
  TrajectoryOptions trajectory;
  /// Called for each record in index order on the calling thread.
  std::function<void(const TrajectoryRecord&)> on_record;
};

struct SeriesStats {
  std::string name;
  std::vector<double> mean;
  /// Standard error of the mean; NaN when only one trajectory was run.
  std::vector<double> sem;
};

struct EnsembleSummary {
  std::vector<double> times;
  std::size_t trajectories = 0;
  bool sem_defined = false;
  /// Observables first, then "Y" and "W".
  std::vector<SeriesStats> series;
  InvariantDeviation max_deviation;

  const SeriesStats& at(const std::string& name) const;
};

/// Trajectory i uses NoiseStream(seed, i). Statistics are merged in index
/// order, so the result does not depend on `parallelism`. A failing
/// trajectory aborts the run with TrajectoryError carrying the lowest
/// failing index.
EnsembleSummary run_ensemble(const ModelFactory& factory, const TimeGrid& grid,
                             const EnsembleOptions& opts);

}  // namespace qtraj
