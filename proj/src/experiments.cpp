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

#include "qtraj/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "qtraj/error.hpp"
#include "qtraj/filter_models.hpp"

namespace qtraj {

namespace {

namespace fs = std::filesystem;

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& meta, const std::vector<std::string>& cols)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
    out_ << kCsvSchema << ' ' << meta << '\n';
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      if (i) out_ << ',';
      out_ << buf;
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw Error("write to '" + path_ + "' failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string block_label(int j, int k) { return std::to_string(j) + std::to_string(k); }

fs::path prepare_dir(const ExperimentConfig& c) {
  fs::path dir(c.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

const char* kind_name(MeasurementKind k) {
  return k == MeasurementKind::counting ? "counting" : "homodyne";
}

}  // namespace

const std::vector<double>& MasterSeries::series(const std::string& name) const {
  for (std::size_t o = 0; o < names.size(); ++o)
    if (names[o] == name) return observables[o];
  throw IndexError("master series has no observable named '" + name + "'");
}

MasterSeries compute_master(const Experiment& e, std::size_t stride) {
  if (stride == 0) throw InvariantError("record stride must be at least 1");
  HierarchyState state;
  HierarchyRhs rhs;
  std::optional<WeightMatrix> gamma;
  if (std::holds_alternative<VacuumField>(e.field)) {
    state = vacuum_initial_state(projector(e.eta), e.grid.t0);
    if (e.timed_system) {
      TimedSlhTriple g = *e.timed_system;
      rhs = [g](double t, const HierarchyState& s) {
        HierarchyState out = s;
        out.blocks[0] = vacuum_me_rhs(g.at(t), s.blocks[0]);
        return out;
      };
    } else {
      rhs = make_hierarchy_rhs(e.system, e.field);
    }
  } else {
    state = initial_state(e.field, e.eta, e.grid.t0);
    rhs = make_hierarchy_rhs(e.system, e.field);
    if (const auto* p = std::get_if<PhotonCombination>(&e.field)) gamma = p->gamma;
    if (const auto* c = std::get_if<CoherentCombination>(&e.field)) gamma = c->gamma;
  }

  MasterSeries m;
  m.n = state.n;
  for (const auto& o : e.observables) m.names.push_back(o.name);
  m.observables.resize(m.names.size());
  m.traces.resize(state.blocks.size());

  auto sample = [&](const HierarchyState& s) {
    m.times.push_back(s.t);
    const Operator rho = gamma ? combine_unconditional(*gamma, s) : s.blocks[0];
    for (std::size_t o = 0; o < e.observables.size(); ++o)
      m.observables[o].push_back((rho * e.observables[o].op).trace().real());
    for (std::size_t b = 0; b < s.blocks.size(); ++b) m.traces[b].push_back(s.blocks[b].trace());
  };

  const std::size_t steps = e.grid.steps();
  sample(state);
  propagate_rk4(state, rhs, e.grid.dt, steps, [&](const HierarchyState& s, std::size_t step) {
    if (step % stride == 0 || step == steps) sample(s);
  });
  // propagate_rk4 stamps t = t0 + i dt, matching TimeGrid::time
  return m;
}

void write_master_csv(const std::string& path, const MasterSeries& m) {
  std::vector<std::string> cols{"t"};
  cols.insert(cols.end(), m.names.begin(), m.names.end());
  for (int j = 0; j < m.n; ++j)
    for (int k = 0; k < m.n; ++k) {
      cols.push_back("tr_" + block_label(j, k) + "_re");
      cols.push_back("tr_" + block_label(j, k) + "_im");
    }
  CsvWriter w(path, "kind=master blocks=" + std::to_string(m.n), cols);
  std::vector<double> row;
  for (std::size_t i = 0; i < m.times.size(); ++i) {
    row.assign(1, m.times[i]);
    for (const auto& o : m.observables) row.push_back(o[i]);
    for (const auto& tr : m.traces) {
      row.push_back(tr[i].real());
      row.push_back(tr[i].imag());
    }
    w.row(row);
  }
  w.close();
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& r) {
  std::vector<std::string> cols{"t", "dY", "innovation"};
  cols.insert(cols.end(), r.names.begin(), r.names.end());
  CsvWriter w(path,
              std::string("kind=trajectory scheme=") + kind_name(r.scheme) +
                  " seed=" + std::to_string(r.seed) + " index=" + std::to_string(r.index),
              cols);
  std::vector<double> row;
  for (std::size_t i = 0; i < r.size(); ++i) {
    row = {r.times[i], r.dY[i], r.innovation[i]};
    for (const auto& o : r.observables) row.push_back(o[i]);
    w.row(row);
  }
  w.close();
}

void write_summary_csv(const std::string& path, const EnsembleSummary& s) {
  std::vector<std::string> cols{"t"};
  for (const auto& ser : s.series) {
    cols.push_back(ser.name + "_mean");
    cols.push_back(ser.name + "_sem");
  }
  CsvWriter w(path,
              "kind=summary trajectories=" + std::to_string(s.trajectories) +
                  (s.sem_defined ? " sem=defined" : " sem=undefined"),
              cols);
  std::vector<double> row;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    row.assign(1, s.times[i]);
    for (const auto& ser : s.series) {
      row.push_back(ser.mean[i]);
      row.push_back(ser.sem[i]);
    }
    w.row(row);
  }
  w.close();
}

std::string trajectory_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_%05zu.csv", index);
  return buf;
}

ExperimentConfig apply_overrides(ExperimentConfig c, const CommandOptions& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) {
    if (o.out_dir->empty()) throw ConfigError("/output/dir", "must not be empty");
    c.output.dir = *o.out_dir;
  }
  if (o.parallelism) {
    if (*o.parallelism < 1 || *o.parallelism > 1024)
      throw ConfigError("/parallelism", "must be between 1 and 1024");
    c.parallelism = *o.parallelism;
  }
  return c;
}

namespace {

void print_warnings(const Experiment& e, std::ostream& log) {
  for (const auto& w : e.warnings) log << "warning: " << w << '\n';
}

}  // namespace

int command_master(const ExperimentConfig& c, std::ostream& log) {
  const Experiment e = build_experiment(c);
  print_warnings(e, log);
  const fs::path dir = prepare_dir(c);
  const MasterSeries m = compute_master(e, c.grid.record_stride);
  const std::string path = (dir / "master.csv").string();
  write_master_csv(path, m);
  log << "master: " << m.times.size() << " samples -> " << path << '\n';
  for (std::size_t o = 0; o < m.names.size(); ++o) {
    const auto& s = m.observables[o];
    const auto it = std::max_element(s.begin(), s.end());
    log << "  max " << m.names[o] << " = " << *it << " at t = "
        << m.times[static_cast<std::size_t>(it - s.begin())] << '\n';
  }
  return 0;
}

int command_trajectory(const ExperimentConfig& c, std::ostream& log) {
  const Experiment e = build_experiment(c);
  print_warnings(e, log);
  const fs::path dir = prepare_dir(c);
  auto model = make_filter_model(e.filter_spec());
  NoiseStream stream(c.seed, 0);
  TrajectoryOptions topts;
  topts.record_stride = c.grid.record_stride;
  const TrajectoryRecord r = run_trajectory(*model, e.grid, stream, topts);
  const std::string path = (dir / trajectory_file_name(0)).string();
  write_trajectory_csv(path, r);
  log << "trajectory: seed " << c.seed << ", " << r.size() << " samples -> " << path << '\n';
  return 0;
}

int command_ensemble(const ExperimentConfig& c, std::ostream& log) {
  const Experiment e = build_experiment(c);
  print_warnings(e, log);
  const fs::path dir = prepare_dir(c);
  EnsembleOptions opts;
  opts.seed = c.seed;
  opts.trajectories = c.trajectories;
  opts.parallelism = c.parallelism;
  opts.trajectory.record_stride = c.grid.record_stride;
  if (c.output.trajectory_files) {
    opts.on_record = [&dir](const TrajectoryRecord& r) {
      write_trajectory_csv((dir / trajectory_file_name(r.index)).string(), r);
    };
  }
  const EnsembleSummary s = run_ensemble(make_filter_model_factory(e.filter_spec()), e.grid, opts);
  const std::string path = (dir / "summary.csv").string();
  write_summary_csv(path, s);
  log << "ensemble: " << s.trajectories << " trajectories, seed " << c.seed << " -> " << path
      << '\n';
  if (!s.sem_defined) log << "  standard errors undefined for a single trajectory\n";
  log << "  max trace deviation " << s.max_deviation.trace << ", max pairing deviation "
      << s.max_deviation.pairing << '\n';
  return 0;
}

int command_oracle_check(const ExperimentConfig& c, std::ostream& log) {
  const Experiment e = build_experiment(c);
  print_warnings(e, log);
  if (std::holds_alternative<VacuumField>(e.field))
    throw ConfigError("/field/type", "oracle-check needs a photon or coherent field");
  const fs::path dir = prepare_dir(c);
  OracleOptions oo;
  oo.w_threshold = c.oracle.w_threshold;
  oo.sample_stride = c.grid.record_stride;
  const OracleReport r = oracle_check(e.system, e.field, e.eta, e.grid, oo, c.oracle.tolerance);

  nlohmann::ordered_json j;
  j["passed"] = r.passed;
  j["max_deviation"] = r.max_deviation;
  j["tolerance"] = r.tolerance;
  j["block_max"] = r.block_max;
  j["samples"] = r.samples;
  j["valid_points"] = r.valid_points;
  j["invalid_points"] = r.invalid_points;
  if (r.invalid_points > 0) j["first_invalid_t"] = r.first_invalid_t;
  const std::string path = (dir / "oracle.json").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw Error("write to '" + path + "' failed");
  }

  log << "oracle-check: " << (r.passed ? "PASS" : "FAIL") << ", max deviation "
      << r.max_deviation << " (tolerance " << r.tolerance << ")\n";
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(r.block_max.size()))));
  for (int b = 0; b < static_cast<int>(r.block_max.size()); ++b)
    log << "  block " << block_label(b / n, b % n) << ": "
        << r.block_max[static_cast<std::size_t>(b)] << '\n';
  if (r.invalid_points > 0)
    log << "  " << r.invalid_points << " block samples skipped (weight below "
        << oo.w_threshold << "), first at t = " << r.first_invalid_t << '\n';
  return r.passed ? 0 : 3;
}

}  // namespace qtraj
