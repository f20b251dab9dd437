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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/config.hpp"
#include "qtraj/master_hierarchy.hpp"
#include "qtraj/sde_engine.hpp"

namespace qtraj {

// CSV layout. Line 1 is a schema comment
//   #qtraj-csv v1 kind=<master|trajectory|summary> key=value ...
// line 2 the header (first column "t"), then one row per sample. Floats are
// printed with %.17g.
//
//   master:     t, <obs>..., tr_<j><k>_re, tr_<j><k>_im for every block
//   trajectory: t, dY, innovation, <obs>...
//   summary:    t, <name>_mean, <name>_sem for each observable, then Y and W
inline constexpr const char* kCsvSchema = "#qtraj-csv v1";

/// Unconditional evolution sampled on the grid (every `stride` steps).
struct MasterSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> observables;  ///< [observable][sample]
  int n = 1;                                     ///< blocks per side
  std::vector<std::vector<Complex>> traces;      ///< [block, row-major][sample]

  /// Throws IndexError for an unknown observable.
  const std::vector<double>& series(const std::string& name) const;
};

/// RK4 propagation of the master equation or hierarchy on the experiment grid.
MasterSeries compute_master(const Experiment& e, std::size_t stride = 1);

void write_master_csv(const std::string& path, const MasterSeries& m);
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& r);
void write_summary_csv(const std::string& path, const EnsembleSummary& s);

/// "traj_00042.csv"
std::string trajectory_file_name(std::size_t index);

/// Command-line overrides of config fields.
struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> parallelism;
};

ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& opts);

// Subcommands. Each writes its files under config.output.dir, prints a short
// report to `log`, and returns the process exit code (0, or 3 for a failed
// oracle check). Errors propagate as exceptions.
int command_master(const ExperimentConfig& config, std::ostream& log);
int command_trajectory(const ExperimentConfig& config, std::ostream& log);
int command_ensemble(const ExperimentConfig& config, std::ostream& log);
int command_oracle_check(const ExperimentConfig& config, std::ostream& log);

}  // namespace qtraj
