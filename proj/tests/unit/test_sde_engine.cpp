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

#include <algorithm>
#include <cmath>

#include "qtraj/error.hpp"
#include "qtraj/filter_models.hpp"
#include "qtraj/sde_engine.hpp"

using namespace qtraj;

namespace {

// Constant-rate toy model: no state, one observable pinned at 0.25.
class ConstantModel : public TrajectoryModel {
 public:
  explicit ConstantModel(MeasurementKind kind, double rate = 0.3) : kind_(kind), rate_(rate) {}
  MeasurementKind scheme() const override { return kind_; }
  std::vector<std::string> observable_names() const override { return {"x"}; }
  void reset(double) override {}
  double record_rate(double) const override { return rate_; }
  void advance(double, double, double) override {}
  void observe(std::span<double> out) const override { out[0] = 0.25; }
  InvariantDeviation invariant_deviation() const override { return {}; }

 private:
  MeasurementKind kind_;
  double rate_;
};

// Fails once the running record crosses a level.
class FragileModel : public ConstantModel {
 public:
  explicit FragileModel(double level)
      : ConstantModel(MeasurementKind::homodyne, 0.0), level_(level) {}
  void reset(double) override { y_ = 0.0; }
  void advance(double, double, double dY) override {
    y_ += dY;
    if (y_ > level_) throw InvariantError("record crossed the level");
  }

 private:
  double level_;
  double y_ = 0.0;
};

FilterModelSpec fig5_spec(MeasurementKind kind) {
  const auto tl = preset_two_level();
  FilterModelSpec s;
  s.system = SlhTriple::make(tl.identity, tl.sigma_minus, Operator::Zero(2, 2));
  s.field = single_photon(gaussian_wavepacket(1.46, 3.0));
  s.eta = ground_ket();
  s.measurement.kind = kind;
  s.observables = {{"P_e", tl.excited}};
  return s;
}

std::vector<double> fig5_master(const TimeGrid& grid, std::size_t stride) {
  const auto tl = preset_two_level();
  const FilterModelSpec s = fig5_spec(MeasurementKind::homodyne);
  HierarchyState h = initial_state(s.field, s.eta, grid.t0);
  std::vector<double> out{0.0};
  propagate_rk4(h, make_hierarchy_rhs(s.system, s.field), grid.dt, grid.steps(),
                [&](const HierarchyState& st, std::size_t step) {
                  if (step % stride == 0)
                    out.push_back(block_expectation(st, 1, 1, tl.excited).real());
                });
  return out;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("noise streams are counter based") {
  NoiseStream a(42, 7), b(42, 7), other(42, 8);
  std::vector<double> xs;
  for (int i = 0; i < 100; ++i) xs.push_back(a.next_normal());
  for (int i = 0; i < 100; ++i) CHECK(b.next_normal() == xs[static_cast<std::size_t>(i)]);
  CHECK(other.next_normal() != xs[0]);
  NoiseStream c(42, 7, 50);
  CHECK(c.next_normal() == xs[50]);
  c.seek(3);
  CHECK(c.next_normal() == xs[3]);
  CHECK(c.counter() == 4);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.next_uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("gaussian increments") {
  const double dt = 1e-3;
  const std::size_t n = 1000000;
  NoiseStream s(2026, 0);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = gaussian_increment(s, dt);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(dt / n));
  CHECK(std::abs(var / dt - 1.0) <= 0.01);
  NoiseStream r1(1, 2, 3), r2(1, 2, 3);
  CHECK(gaussian_increment(r1, dt) == gaussian_increment(r2, dt));
  CHECK_THROWS_AS(gaussian_increment(s, 0.0), InvariantError);
}

TEST_CASE("bernoulli jumps") {
  NoiseStream s(5, 0);
  for (int i = 0; i < 10000; ++i) CHECK(bernoulli_jump(s, 0.0, 1e-4) == 0);
  CHECK(s.counter() == 10000);

  // 4e7 draws give a 3-sigma band of about 5% at p = 1e-4.
  const std::size_t n = 40000000;
  std::size_t hits = 0;
  NoiseStream t(6, 0);
  for (std::size_t i = 0; i < n; ++i)
    hits += static_cast<std::size_t>(bernoulli_jump(t, 1.0, 1e-4));
  CHECK(static_cast<double>(hits) / n == doctest::Approx(1e-4).epsilon(0.05));

  NoiseStream a(7, 1), b(7, 1);
  for (int i = 0; i < 1000; ++i)
    CHECK(bernoulli_jump(a, 50.0, 1e-3) == bernoulli_jump(b, 50.0, 1e-3));
  CHECK_THROWS_AS(bernoulli_jump(s, 200.0, 1e-3), InvariantError);
  CHECK_THROWS_AS(bernoulli_jump(s, -1.0, 1e-3), InvariantError);
}

TEST_CASE("sample steps") {
  const TimeGrid g{0.0, 1.0, 0.1};
  CHECK(sample_steps(g, 1).size() == 11);
  CHECK(sample_steps(g, 3) == std::vector<std::size_t>{0, 3, 6, 9, 10});
  CHECK(sample_steps(g, 10) == std::vector<std::size_t>{0, 10});
}

TEST_CASE("trajectory bookkeeping") {
  const TimeGrid grid{0.0, 2.0, 1e-3};
  SUBCASE("homodyne") {
    ConstantModel m(MeasurementKind::homodyne, 0.3);
    NoiseStream s(3, 4), replay(3, 4);
    const TrajectoryRecord r = run_trajectory(m, grid, s);
    REQUIRE(r.size() == grid.steps() + 1);
    CHECK(r.times.front() == 0.0);
    CHECK(r.times.back() == doctest::Approx(2.0));
    CHECK(r.dY.front() == 0.0);
    double w = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double injected = gaussian_increment(replay, grid.dt);
      CHECK(std::abs(r.innovation[i] - injected) <= 1e-12);
      CHECK(std::abs(r.dY[i] - 0.3 * grid.dt - injected) <= 1e-12);
      w += injected;
    }
    CHECK(r.W.back() == doctest::Approx(w).epsilon(1e-12));
    for (double x : r.series("x")) CHECK(x == 0.25);
    CHECK_THROWS_AS(r.series("nope"), IndexError);
  }
  SUBCASE("counting") {
    ConstantModel m(MeasurementKind::counting, 5.0);
    NoiseStream s(3, 5), replay(3, 5);
    const TrajectoryRecord r = run_trajectory(m, grid, s);
    double n = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const int dN = bernoulli_jump(replay, 5.0, grid.dt);
      CHECK(r.dY[i] == dN);
      CHECK(std::abs(r.innovation[i] - (dN - 5.0 * grid.dt)) <= 1e-12);
      n += dN;
    }
    CHECK(r.Y.back() == n);
    CHECK(n > 0.0);
  }
  SUBCASE("strided windows add up") {
    ConstantModel m(MeasurementKind::homodyne);
    NoiseStream a(3, 6), b(3, 6);
    const TrajectoryRecord full = run_trajectory(m, grid, a);
    TrajectoryOptions o;
    o.record_stride = 7;
    const TrajectoryRecord part = run_trajectory(m, grid, b, o);
    const auto steps = sample_steps(grid, 7);
    REQUIRE(part.size() == steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
      CHECK(part.Y[i] == doctest::Approx(full.Y[steps[i]]).epsilon(1e-12));
      CHECK(part.W[i] == doctest::Approx(full.W[steps[i]]).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero coupling leaves observables constant") {
  const auto tl = preset_two_level();
  FilterModelSpec s;
  s.system = SlhTriple::make(tl.identity, Operator::Zero(2, 2), Operator::Zero(2, 2));
  s.eta = Ket(Eigen::Vector2cd(Complex(0.6, 0.0), Complex(0.0, 0.8)));
  s.observables = {{"P_e", tl.excited}};
  for (MeasurementKind k : {MeasurementKind::homodyne, MeasurementKind::counting}) {
    s.measurement.kind = k;
    auto m = make_filter_model(s);
    NoiseStream n(1, 0);
    const TrajectoryRecord r = run_trajectory(*m, TimeGrid{0.0, 3.0, 1e-3}, n);
    for (double p : r.series("P_e")) CHECK(p == doctest::Approx(0.64).epsilon(1e-14));
  }
}

TEST_CASE("trajectories are reproducible") {
  auto m = make_filter_model(fig5_spec(MeasurementKind::homodyne));
  const TimeGrid grid{0.0, 8.0, 1e-3};
  NoiseStream a(20260101, 17), b(20260101, 17);
  const TrajectoryRecord r1 = run_trajectory(*m, grid, a);
  const TrajectoryRecord r2 = run_trajectory(*m, grid, b);
  CHECK(r1.dY == r2.dY);
  CHECK(r1.observables == r2.observables);
}

TEST_CASE("step failures carry the step index") {
  FragileModel m(0.05);
  NoiseStream s(8, 0);
  try {
    run_trajectory(m, TimeGrid{0.0, 10.0, 1e-3}, s);
    FAIL("expected StepError");
  } catch (const StepError& e) {
    CHECK(e.step() > 0);
    CHECK(e.detail() == "record crossed the level");
  }
}

TEST_CASE("ensembles") {
  const TimeGrid grid{0.0, 8.0, 1e-3};
  const ModelFactory f = make_filter_model_factory(fig5_spec(MeasurementKind::homodyne));

  SUBCASE("one trajectory") {
    EnsembleOptions o;
    o.seed = 4;
    o.trajectories = 1;
    o.trajectory.record_stride = 10;
    TrajectoryRecord kept;
    o.on_record = [&](const TrajectoryRecord& r) { kept = r; };
    const EnsembleSummary s = run_ensemble(f, grid, o);
    CHECK_FALSE(s.sem_defined);
    CHECK(s.at("P_e").mean == kept.series("P_e"));
    for (double e : s.at("P_e").sem) CHECK(std::isnan(e));
    CHECK(s.at("Y").mean == kept.Y);
  }
  SUBCASE("parallelism does not change any number") {
    EnsembleOptions o;
    o.seed = 9;
    o.trajectories = 24;
    o.trajectory.record_stride = 10;
    std::vector<std::uint64_t> order;
    o.on_record = [&](const TrajectoryRecord& r) { order.push_back(r.index); };
    const EnsembleSummary s1 = run_ensemble(f, grid, o);
    std::vector<std::uint64_t> want(24);
    for (std::size_t i = 0; i < 24; ++i) want[i] = i;
    CHECK(order == want);
    order.clear();
    o.parallelism = 8;
    const EnsembleSummary s8 = run_ensemble(f, grid, o);
    CHECK(order == want);
    REQUIRE(s1.series.size() == s8.series.size());
    for (std::size_t k = 0; k < s1.series.size(); ++k) {
      CHECK(s1.series[k].name == s8.series[k].name);
      CHECK(s1.series[k].mean == s8.series[k].mean);
      CHECK(s1.series[k].sem == s8.series[k].sem);
    }
  }
  SUBCASE("summary statistics") {
    EnsembleOptions o;
    o.seed = 10;
    o.trajectories = 12;
    o.trajectory.record_stride = 100;
    std::vector<std::vector<double>> pe;
    o.on_record = [&](const TrajectoryRecord& r) { pe.push_back(r.series("P_e")); };
    const EnsembleSummary s = run_ensemble(f, grid, o);
    CHECK(s.sem_defined);
    CHECK(s.trajectories == 12);
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      double m = 0.0;
      for (const auto& p : pe) m += p[i];
      m /= 12.0;
      double v = 0.0;
      for (const auto& p : pe) v += (p[i] - m) * (p[i] - m);
      const double sem = std::sqrt(v / 11.0 / 12.0);
      CHECK(s.at("P_e").mean[i] == doctest::Approx(m).epsilon(1e-12));
      CHECK(s.at("P_e").sem[i] == doctest::Approx(sem).epsilon(1e-9));
    }
  }
  SUBCASE("a failing trajectory is reported by index") {
    const double level = 1.0;
    std::size_t first = 1000;
    for (std::size_t i = 0; i < 40 && first == 1000; ++i) {
      FragileModel m(level);
      NoiseStream s(31, i);
      try {
        run_trajectory(m, TimeGrid{0.0, 1.0, 1e-3}, s);
      } catch (const StepError&) {
        first = i;
      }
    }
    REQUIRE(first < 40);
    EnsembleOptions o;
    o.seed = 31;
    o.trajectories = 40;
    o.parallelism = 4;
    try {
      run_ensemble([&] { return std::make_unique<FragileModel>(level); }, TimeGrid{0.0, 1.0, 1e-3},
                   o);
      FAIL("expected TrajectoryError");
    } catch (const TrajectoryError& e) {
      CHECK(e.index() == first);
    }
  }
  SUBCASE("64 trajectories follow the master curve") {
    EnsembleOptions o;
    o.seed = 20260101;
    o.trajectories = 64;
    o.trajectory.record_stride = 10;
    const EnsembleSummary s = run_ensemble(f, grid, o);
    const std::vector<double> master = fig5_master(grid, 10);
    const SeriesStats& pe = s.at("P_e");
    REQUIRE(master.size() == pe.mean.size());
    // Early on the paths barely differ and the sem is far below the O(dt)
    // Euler bias, so allow a fixed slack on top of 3 sem.
    std::size_t outside = 0;
    double worst = 0.0;
    for (std::size_t i = 1; i < master.size(); ++i) {
      const double d = std::abs(pe.mean[i] - master[i]);
      worst = std::max(worst, d);
      if (d > 3.0 * pe.sem[i] + 1e-2) ++outside;
    }
    CHECK(outside == 0);
    CHECK(worst <= 0.05);
    const SeriesStats& w = s.at("W");
    for (std::size_t i = 1; i < w.mean.size(); ++i)
      CHECK(std::abs(w.mean[i]) <= 3.0 * std::sqrt(s.times[i] / 64.0));
  }
}
