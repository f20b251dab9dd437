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

#include "qtraj/sde_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "qtraj/error.hpp"

namespace qtraj {

// ---------------------------------------------------------------------------
// Philox

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double uniform53(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PhiloxCounter NoiseStream::next_block() noexcept {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(counter_),
                          static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(index_),
                          static_cast<std::uint32_t>(index_ >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  ++counter_;
  return philox4x32_10(ctr, key);
}

double NoiseStream::next_uniform() noexcept {
  const auto b = next_block();
  return uniform53(b[0], b[1]);
}

double NoiseStream::next_normal() noexcept {
  const auto b = next_block();
  const double u1 = 1.0 - uniform53(b[0], b[1]);  // (0, 1]
  const double u2 = uniform53(b[2], b[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double gaussian_increment(NoiseStream& stream, double dt) {
  if (!(dt > 0.0)) throw InvariantError("gaussian_increment: dt must be positive");
  return std::sqrt(dt) * stream.next_normal();
}

int bernoulli_jump(NoiseStream& stream, double intensity, double dt) {
  if (!(dt > 0.0)) throw InvariantError("bernoulli_jump: dt must be positive");
  if (!(intensity >= 0.0)) {
    std::ostringstream os;
    os << "bernoulli_jump: negative intensity " << intensity;
    throw InvariantError(os.str());
  }
  const double p = intensity * dt;
  if (p > kMaxJumpProbability) {
    std::ostringstream os;
    os << "bernoulli_jump: jump probability " << p << " exceeds " << kMaxJumpProbability
       << "; reduce dt below " << kMaxJumpProbability / intensity;
    throw InvariantError(os.str());
  }
  return stream.next_uniform() < p ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Trajectories

const std::vector<double>& TrajectoryRecord::series(const std::string& name) const {
  if (name == "dY") return dY;
  if (name == "innovation") return innovation;
  if (name == "Y") return Y;
  if (name == "W") return W;
  for (std::size_t o = 0; o < names.size(); ++o)
    if (names[o] == name) return observables[o];
  throw IndexError("trajectory record has no series named '" + name + "'");
}

std::vector<std::size_t> sample_steps(const TimeGrid& grid, std::size_t stride) {
  if (stride == 0) throw InvariantError("record stride must be at least 1");
  const std::size_t n = grid.steps();
  std::vector<std::size_t> out;
  out.reserve(n / stride + 2);
  for (std::size_t i = 0; i <= n; i += stride) out.push_back(i);
  if (out.back() != n) out.push_back(n);
  return out;
}

namespace {

void check_deviation(const InvariantDeviation& d, const TrajectoryOptions& opts) {
  if (d.trace > opts.trace_tol) {
    std::ostringstream os;
    os << "trace invariant violated by " << d.trace;
    throw InvariantError(os.str());
  }
  if (d.pairing > opts.pairing_tol) {
    std::ostringstream os;
    os << "Hermitian pairing violated by " << d.pairing;
    throw InvariantError(os.str());
  }
}

}  // namespace

TrajectoryRecord run_trajectory(TrajectoryModel& model, const TimeGrid& grid, NoiseStream& stream,
                                const TrajectoryOptions& opts) {
  grid.validate();
  const auto samples = sample_steps(grid, opts.record_stride);
  const std::size_t m = samples.size();

  TrajectoryRecord rec;
  rec.grid = grid;
  rec.stride = opts.record_stride;
  rec.seed = stream.seed();
  rec.index = stream.index();
  rec.scheme = model.scheme();
  rec.names = model.observable_names();
  rec.times.resize(m);
  rec.dY.assign(m, 0.0);
  rec.innovation.assign(m, 0.0);
  rec.Y.assign(m, 0.0);
  rec.W.assign(m, 0.0);
  rec.observables.assign(rec.names.size(), std::vector<double>(m, 0.0));
  std::vector<double> obs(rec.names.size());

  const bool counting = rec.scheme == MeasurementKind::counting;
  const double dt = grid.dt;
  const std::size_t n = grid.steps();

  auto sample = [&](std::size_t slot, std::size_t step) {
    rec.times[slot] = grid.time(step);
    model.observe(obs);
    for (std::size_t o = 0; o < obs.size(); ++o) rec.observables[o][slot] = obs[o];
  };

  std::size_t step = 0;
  try {
    model.reset(grid.t0);
    if (opts.check_invariants) check_deviation(model.invariant_deviation(), opts);
    sample(0, 0);

    double y = 0.0, w = 0.0, win_dy = 0.0, win_in = 0.0;
    std::size_t next = 1;
    for (; step < n; ++step) {
      const double t = grid.time(step);
      double rate = model.record_rate(t);
      double dy, innov;
      if (counting) {
        // round-off can leave the intensity a hair below zero
        if (rate < 0.0 && rate > -1e-3) rate = 0.0;
        dy = bernoulli_jump(stream, rate, dt);
        innov = dy - rate * dt;
      } else {
        innov = gaussian_increment(stream, dt);
        dy = rate * dt + innov;
      }
      model.advance(t, dt, dy);
      y += dy;
      w += innov;
      win_dy += dy;
      win_in += innov;

      if (opts.check_invariants) {
        const auto d = model.invariant_deviation();
        rec.max_deviation.trace = std::max(rec.max_deviation.trace, d.trace);
        rec.max_deviation.pairing = std::max(rec.max_deviation.pairing, d.pairing);
        check_deviation(d, opts);
      }
      if (next < m && samples[next] == step + 1) {
        sample(next, step + 1);
        rec.dY[next] = win_dy;
        rec.innovation[next] = win_in;
        rec.Y[next] = y;
        rec.W[next] = w;
        win_dy = win_in = 0.0;
        ++next;
      }
    }
  } catch (const StepError& e) {
    throw StepError(e.detail(), step);
  } catch (const std::exception& e) {
    throw StepError(e.what(), step);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Ensembles

const SeriesStats& EnsembleSummary::at(const std::string& name) const {
  for (const auto& s : series)
    if (s.name == name) return s;
  throw IndexError("ensemble summary has no series named '" + name + "'");
}

namespace {

// Welford accumulator over one time series.
struct Accumulator {
  std::vector<double> mean;
  std::vector<double> m2;

  void add(const std::vector<double>& x, std::size_t count) {
    if (mean.empty()) {
      mean.assign(x.size(), 0.0);
      m2.assign(x.size(), 0.0);
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d * inv;
      m2[i] += d * (x[i] - mean[i]);
    }
  }
};

}  // namespace

EnsembleSummary run_ensemble(const ModelFactory& factory, const TimeGrid& grid,
                             const EnsembleOptions& opts) {
  if (opts.trajectories == 0) throw InvariantError("run_ensemble: need at least one trajectory");
  if (!factory) throw InvariantError("run_ensemble: empty model factory");
  grid.validate();

  const std::size_t total = opts.trajectories;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::max(1u, opts.parallelism), total));
  const std::size_t chunk = std::min<std::size_t>(total, 4 * workers);

  EnsembleSummary summary;
  summary.trajectories = total;
  summary.sem_defined = total >= 2;
  std::vector<Accumulator> acc;
  std::size_t merged = 0;

  std::vector<std::optional<TrajectoryRecord>> records(chunk);
  std::vector<std::exception_ptr> errors(chunk);

  for (std::size_t start = 0; start < total; start += chunk) {
    const std::size_t end = std::min(total, start + chunk);
    std::atomic<std::size_t> next{start};
    for (auto& r : records) r.reset();
    for (auto& e : errors) e = nullptr;

    auto work = [&] {
      for (std::size_t i = next.fetch_add(1); i < end; i = next.fetch_add(1)) {
        try {
          auto model = factory();
          NoiseStream stream(opts.seed, i);
          records[i - start] = run_trajectory(*model, grid, stream, opts.trajectory);
        } catch (...) {
          errors[i - start] = std::current_exception();
        }
      }
    };
    const std::size_t active = std::min(workers, end - start);
    std::vector<std::thread> pool;
    for (std::size_t p = 1; p < active; ++p) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    for (std::size_t i = start; i < end; ++i) {
      if (errors[i - start]) {
        try {
          std::rethrow_exception(errors[i - start]);
        } catch (const std::exception& e) {
          throw TrajectoryError(i, e.what());
        }
      }
      const TrajectoryRecord& rec = *records[i - start];
      if (acc.empty()) {
        summary.times = rec.times;
        for (const auto& name : rec.names) summary.series.push_back({name, {}, {}});
        summary.series.push_back({"Y", {}, {}});
        summary.series.push_back({"W", {}, {}});
        acc.resize(summary.series.size());
      }
      ++merged;
      for (std::size_t o = 0; o < rec.names.size(); ++o) acc[o].add(rec.observables[o], merged);
      acc[rec.names.size()].add(rec.Y, merged);
      acc[rec.names.size() + 1].add(rec.W, merged);
      summary.max_deviation.trace = std::max(summary.max_deviation.trace, rec.max_deviation.trace);
      summary.max_deviation.pairing =
          std::max(summary.max_deviation.pairing, rec.max_deviation.pairing);
      if (opts.on_record) opts.on_record(rec);
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(total);
  for (std::size_t s = 0; s < summary.series.size(); ++s) {
    summary.series[s].mean = std::move(acc[s].mean);
    auto& sem = summary.series[s].sem;
    sem.resize(summary.series[s].mean.size());
    for (std::size_t i = 0; i < sem.size(); ++i)
      sem[i] = summary.sem_defined ? std::sqrt(acc[s].m2[i] / (n - 1.0) / n) : nan;
  }
  return summary;
}

}  // namespace qtraj
