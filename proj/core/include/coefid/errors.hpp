// Copyright 2026 The coefid Authors. All Rights Reserved.
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
#include <vector>

namespace coefid {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed polygons, out-of-range parameters, bad files.
/// The CLI maps this family to exit status 1.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class InvalidCoefficient : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A caller broke a documented precondition (e.g. a non-symmetric matrix
/// passed to the SPD solver).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Failures of the numerical algorithms themselves. The CLI maps this family
/// to exit status 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class MeshingFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, double final_residual,
                std::size_t iterations)
      : NumericalError(what),
        final_residual_(final_residual),
        iterations_(iterations) {}

  double final_residual() const noexcept { return final_residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double final_residual_;
  std::size_t iterations_;
};

class IndefiniteSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The observation functional of the auxiliary field w vanished (or nearly
/// so), so the coefficient cannot be recovered at this time step.
class DegenerateObservation : public NumericalError {
 public:
  DegenerateObservation(const std::string& what, std::size_t step,
                        double w_functional)
      : NumericalError(what), step_(step), w_functional_(w_functional) {}

  std::size_t step() const noexcept { return step_; }
  double w_functional() const noexcept { return w_functional_; }

 private:
  std::size_t step_;
  double w_functional_;
};

class TransformDegenerate : public NumericalError {
 public:
  TransformDegenerate(const std::string& what, std::size_t step)
      : NumericalError(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class FixedPointNoConvergence : public NumericalError {
 public:
  FixedPointNoConvergence(const std::string& what, std::size_t step,
                          std::vector<double> history)
      : NumericalError(what), step_(step), history_(std::move(history)) {}

  std::size_t step() const noexcept { return step_; }
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::size_t step_;
  std::vector<double> history_;
};

}  // namespace coefid
