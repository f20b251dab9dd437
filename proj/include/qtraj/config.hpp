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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/filter_models.hpp"
#include "qtraj/time_grid.hpp"

namespace qtraj {

// Plain-data mirror of the JSON document. Matrices are kept as nested
// vectors so that configs compare with ==.

using ComplexMatrix = std::vector<std::vector<Complex>>;

/// A time function: "gaussian" (omega, t_c, amplitude), "constant" (value
/// on [lo, hi]) or "table" (piecewise-linear samples).
struct FunctionConfig {
  std::string shape = "gaussian";
  double omega = 1.0;
  double t_c = 0.0;
  Complex amplitude{1.0, 0.0};
  Complex value{0.0, 0.0};
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> times;
  std::vector<Complex> values;

  bool operator==(const FunctionConfig&) const = default;
};

struct SystemConfig {
  /// "two_level", "cavity" or "explicit".
  std::string preset = "two_level";
  long dim = 2;
  double kappa = 1.0;
  std::optional<ComplexMatrix> S, L, H;
  /// "ground", "excited", "fock:<n>", or "explicit" with `initial_ket`.
  std::string initial_state = "ground";
  std::vector<Complex> initial_ket;

  bool operator==(const SystemConfig&) const = default;
};

struct FieldConfig {
  /// "vacuum", "photon" or "coherent".
  std::string type = "vacuum";
  /// photon
  FunctionConfig wavepacket;
  /// coherent
  std::vector<FunctionConfig> amplitudes;
  std::optional<ComplexMatrix> gamma;
  /// coherent superposition coefficients, normalized against the Gram matrix
  std::optional<std::vector<Complex>> coefficients;
  /// vacuum only: classical drive alpha(t), i.e. the system fed by (I, alpha, 0)
  std::optional<FunctionConfig> drive;

  bool operator==(const FieldConfig&) const = default;
};

struct MeasurementConfig {
  std::string kind = "homodyne";
  double intensity_floor = kIntensityFloor;

  bool operator==(const MeasurementConfig&) const = default;
};

struct GridConfig {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  std::size_t record_stride = 1;

  bool operator==(const GridConfig&) const = default;
};

struct ObservableConfig {
  std::string name;
  /// Absent for named presets (P_e, P_g, sigma_x, sigma_y, sigma_z, n).
  std::optional<ComplexMatrix> matrix;

  bool operator==(const ObservableConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  bool trajectory_files = true;

  bool operator==(const OutputConfig&) const = default;
};

struct OracleConfig {
  double tolerance = 1e-6;
  double w_threshold = 1e-6;

  bool operator==(const OracleConfig&) const = default;
};

struct ExperimentConfig {
  SystemConfig system;
  FieldConfig field;
  MeasurementConfig measurement;
  GridConfig grid;
  std::uint64_t seed = 0;
  std::size_t trajectories = 1;
  unsigned parallelism = 1;
  std::vector<ObservableConfig> observables;
  OutputConfig output;
  OracleConfig oracle;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and fully validates a JSON config. Throws ConfigError whose
/// pointer() names the first offending field. Non-fatal remarks (such as a
/// wavepacket that starts before t0) are appended to `warnings`.
ExperimentConfig parse_config(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Reads and parses a file; I/O failures are ConfigErrors with an empty pointer.
ExperimentConfig load_config(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Library objects described by a config.
struct Experiment {
  /// Constant part of the system (the full system when no drive is set).
  SlhTriple system;
  /// Set when the field carries a classical drive.
  std::optional<TimedSlhTriple> timed_system;
  FieldSpec field;
  Ket eta;
  MeasurementScheme measurement;
  std::vector<NamedObservable> observables;
  TimeGrid grid;
  std::vector<std::string> warnings;

  FilterModelSpec filter_spec() const;
};

/// Builds and checks every physical invariant; failures are ConfigErrors
/// pointing at the responsible field.
Experiment build_experiment(const ExperimentConfig& config);

}  // namespace qtraj
