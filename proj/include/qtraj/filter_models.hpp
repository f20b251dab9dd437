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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/filter_hierarchy.hpp"
#include "qtraj/sde_engine.hpp"

namespace qtraj {

struct NamedObservable {
  std::string name;
  Operator op;
};

/// Everything a conditional filter needs. `timed_system`, when present,
/// replaces `system` and is only supported with a vacuum field.
struct FilterModelSpec {
  SlhTriple system;
  std::optional<TimedSlhTriple> timed_system;
  FieldSpec field = VacuumField{};
  Ket eta;
  MeasurementScheme measurement;
  std::vector<NamedObservable> observables;
};

/// Builds the filter for `spec`. Dimensions 2 and 4 use fixed-size kernels.
std::unique_ptr<TrajectoryModel> make_filter_model(const FilterModelSpec& spec);

/// Factory sharing one validated copy of `spec` across threads.
ModelFactory make_filter_model_factory(FilterModelSpec spec);

/// Snapshot of the conditional blocks of a model built by make_filter_model.
/// Throws InvariantError for any other model.
HierarchyState filter_model_state(const TrajectoryModel& model);

}  // namespace qtraj
