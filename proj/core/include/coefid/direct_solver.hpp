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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coefid/fem_assembly.hpp"
#include "coefid/mesh.hpp"
#include "coefid/sparse_linalg.hpp"

namespace coefid {

/// Uniform time grid t^n = n * tau, n = 0..N, tau = T / N.
class TimeGrid {
 public:
  TimeGrid(double final_time, std::size_t steps);

  double final_time() const { return final_time_; }
  std::size_t steps() const { return steps_; }
  double tau() const { return final_time_ / static_cast<double>(steps_); }
  double t(std::size_t n) const { return static_cast<double>(n) * tau(); }

 private:
  double final_time_;
  std::size_t steps_;
};

/// Time-dependent lower coefficient p(t).
class CoefficientFunction {
 public:
  CoefficientFunction(std::function<double(double)> p, std::string name);

  double operator()(double t) const { return p_(t); }
  const std::string& name() const { return name_; }

  static CoefficientFunction zero();
  static CoefficientFunction constant(double c);
  /// p = 1000 t on (0, T/2], 0 afterwards.
  static CoefficientFunction switched_ramp(double final_time);
  /// p = 1000 t / (1 + 500 t^2).
  static CoefficientFunction smooth_rational();
  /// Piecewise-linear interpolation of (time, value) samples; constant
  /// extrapolation outside the sampled range. Times must increase strictly.
  static CoefficientFunction table(std::vector<double> times,
                                   std::vector<double> values);

 private:
  std::function<double(double)> p_;
  std::string name_;
};

/// Mesh, problem data, and the assembled forms, built once and shared
/// read-only by every solver run on that mesh.
struct Discretization {
  Mesh mesh;
  ProblemSpec spec;
  AssembledForms forms;

  static Discretization build(Mesh mesh, ProblemSpec spec);
  Vector load(double t) const { return assemble_load(mesh, spec, t); }
};

struct FieldTrajectory {
  TimeGrid grid;
  std::vector<Vector> states;  // u^0 .. u^N
};

enum class DirectScheme { kImplicit, kCrankNicolson };

std::string to_string(DirectScheme scheme);
DirectScheme parse_direct_scheme(const std::string& name);

/// L2 projection: solves M u^0 = (u0, phi_i).
Vector project_initial(const AssembledForms& forms, const Mesh& mesh,
                       const SpatialFunction& u0,
                       const SolverOptions& solver = {});

/// (M/tau + K + B + p_next M) u^{n+1} = M u^n / tau + F_next.
/// Throws IndefiniteSystem when 1/tau + p_next <= 0.
Vector step_implicit(const AssembledForms& forms, std::span<const double> u_n,
                     double p_next, std::span<const double> f_next, double tau,
                     const SolverOptions& solver = {});

/// (M/tau + K/2 + B/2 + p_next M/2) u^{n+1}
///     = (M/tau - K/2 - B/2 - p_n M/2) u^n + F_next.
/// The source is taken at the new time level.
Vector step_crank_nicolson(const AssembledForms& forms,
                           std::span<const double> u_n, double p_n,
                           double p_next, std::span<const double> f_next,
                           double tau, const SolverOptions& solver = {});

FieldTrajectory run_direct(const Discretization& disc,
                           const CoefficientFunction& p, const TimeGrid& grid,
                           DirectScheme scheme,
                           const SolverOptions& solver = {});
FieldTrajectory run_direct(const Mesh& mesh, const ProblemSpec& spec,
                           const CoefficientFunction& p, const TimeGrid& grid,
                           DirectScheme scheme,
                           const SolverOptions& solver = {});

/// phi^n = r . u^n, optionally scaled by (1 + noise_level * xi^n) with xi^n
/// standard normal drawn from a generator seeded with `seed`.
std::vector<double> record_observations(const FieldTrajectory& traj,
                                        const ObservationFunctional& obs,
                                        double noise_level = 0.0,
                                        std::uint64_t seed = 0);

/// Keeps every (N_fine / N_coarse)-th sample. Throws InvalidInput unless
/// the fine series has N_fine + 1 entries and N_coarse divides N_fine.
std::vector<double> subsample(std::span<const double> fine_series,
                              std::size_t coarse_steps);

/// CSV with header `t,value`, 17 significant digits.
void write_observations_csv(std::ostream& out, const TimeGrid& grid,
                            std::span<const double> series);
/// Parses a `t,value` CSV; the grid is inferred from the time column.
std::pair<TimeGrid, std::vector<double>> read_observations_csv(
    std::istream& in);
/// CSV with header `t,node_0,...,node_{n-1}`.
void write_field_csv(std::ostream& out, const FieldTrajectory& traj);

}  // namespace coefid
