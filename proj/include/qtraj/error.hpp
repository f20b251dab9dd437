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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qtraj {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on Hilbert spaces of different dimension.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, long lhs_dim, long rhs_dim)
      : Error(what + ": dimension mismatch (" + std::to_string(lhs_dim) +
              " vs " + std::to_string(rhs_dim) + ")"),
        lhs_dim_(lhs_dim),
        rhs_dim_(rhs_dim) {}

  long lhs_dim() const noexcept { return lhs_dim_; }
  long rhs_dim() const noexcept { return rhs_dim_; }

 private:
  long lhs_dim_;
  long rhs_dim_;
};

/// A physical or structural invariant does not hold (non-unitary S,
/// non-Hermitian H, unnormalized weights, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Index outside the valid range of a block family or amplitude set.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature failed to reach the requested tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double residual)
      : Error(what + " (residual estimate " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A trajectory step failed; carries the step index.
class StepError : public Error {
 public:
  StepError(const std::string& what, std::size_t step)
      : Error("step " + std::to_string(step) + ": " + what), detail_(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }
  /// Message without the step prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t step_;
};

/// One trajectory of an ensemble failed.
class TrajectoryError : public Error {
 public:
  TrajectoryError(std::size_t index, const std::string& what)
      : Error("trajectory " + std::to_string(index) + ": " + what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Invalid experiment configuration; `pointer()` is a JSON pointer to the
/// offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer.empty() ? what : pointer + ": " + what),
        pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace qtraj
