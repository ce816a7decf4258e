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

#include "coefid/direct_solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "coefid/csv.hpp"
#include "coefid/errors.hpp"

namespace coefid {

TimeGrid::TimeGrid(double final_time, std::size_t steps)
    : final_time_(final_time), steps_(steps) {
  if (!(final_time > 0.0) || !std::isfinite(final_time)) {
    throw InvalidInput("final time must be positive");
  }
  if (steps < 1) throw InvalidInput("time grid needs at least one step");
}

CoefficientFunction::CoefficientFunction(std::function<double(double)> p,
                                         std::string name)
    : p_(std::move(p)), name_(std::move(name)) {}

CoefficientFunction CoefficientFunction::zero() {
  return {[](double) { return 0.0; }, "zero"};
}

CoefficientFunction CoefficientFunction::constant(double c) {
  return {[c](double) { return c; }, "constant"};
}

CoefficientFunction CoefficientFunction::switched_ramp(double final_time) {
  return {[half = 0.5 * final_time](double t) {
            return t <= half ? 1000.0 * t : 0.0;
          },
          "switched_ramp"};
}

CoefficientFunction CoefficientFunction::smooth_rational() {
  return {[](double t) { return 1000.0 * t / (1.0 + 500.0 * t * t); },
          "smooth_rational"};
}

CoefficientFunction CoefficientFunction::table(std::vector<double> times,
                                               std::vector<double> values) {
  if (times.empty() || times.size() != values.size()) {
    throw InvalidInput("coefficient table needs matching, nonempty columns");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw InvalidInput("coefficient table times must increase strictly");
    }
  }
  return {[times = std::move(times), values = std::move(values)](double t) {
            if (t <= times.front()) return values.front();
            if (t >= times.back()) return values.back();
            const auto it = std::upper_bound(times.begin(), times.end(), t);
            const auto i = static_cast<std::size_t>(it - times.begin());
            const double s = (t - times[i - 1]) / (times[i] - times[i - 1]);
            return (1.0 - s) * values[i - 1] + s * values[i];
          },
          "table"};
}

Discretization Discretization::build(Mesh mesh, ProblemSpec spec) {
  AssembledForms forms = assemble(mesh, spec);
  return {std::move(mesh), std::move(spec), std::move(forms)};
}

std::string to_string(DirectScheme scheme) {
  return scheme == DirectScheme::kImplicit ? "implicit" : "crank_nicolson";
}

DirectScheme parse_direct_scheme(const std::string& name) {
  if (name == "implicit") return DirectScheme::kImplicit;
  if (name == "crank_nicolson") return DirectScheme::kCrankNicolson;
  throw InvalidInput("unknown direct scheme '" + name +
                     "' (expected implicit or crank_nicolson)");
}

Vector project_initial(const AssembledForms& forms, const Mesh& mesh,
                       const SpatialFunction& u0,
                       const SolverOptions& solver) {
  const Vector rhs = assemble_load(mesh, u0);
  return solve_spd(forms.mass, rhs, solver);
}

Vector step_implicit(const AssembledForms& forms, std::span<const double> u_n,
                     double p_next, std::span<const double> f_next, double tau,
                     const SolverOptions& solver) {
  if (!(tau > 0.0)) throw InvalidInput("time step must be positive");
  if (!(1.0 / tau + p_next > 0.0)) {
    throw IndefiniteSystem("implicit step: 1/tau + p = " +
                           std::to_string(1.0 / tau + p_next) +
                           " leaves the system indefinite");
  }
  const SparseMatrix a =
      axpy_combine({{1.0 / tau + p_next, &forms.mass},
                    {1.0, &forms.stiffness},
                    {1.0, &forms.boundary}});
  Vector rhs = forms.mass * u_n;
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = rhs[i] / tau + f_next[i];
  return solve_spd(a, rhs, solver, u_n);
}

Vector step_crank_nicolson(const AssembledForms& forms,
                           std::span<const double> u_n, double p_n,
                           double p_next, std::span<const double> f_next,
                           double tau, const SolverOptions& solver) {
  if (!(tau > 0.0)) throw InvalidInput("time step must be positive");
  if (!(1.0 / tau + 0.5 * p_next > 0.0)) {
    throw IndefiniteSystem("Crank-Nicolson step: 1/tau + p/2 = " +
                           std::to_string(1.0 / tau + 0.5 * p_next) +
                           " leaves the system indefinite");
  }
  const SparseMatrix lhs =
      axpy_combine({{1.0 / tau + 0.5 * p_next, &forms.mass},
                    {0.5, &forms.stiffness},
                    {0.5, &forms.boundary}});
  const SparseMatrix explicit_part =
      axpy_combine({{1.0 / tau - 0.5 * p_n, &forms.mass},
                    {-0.5, &forms.stiffness},
                    {-0.5, &forms.boundary}});
  Vector rhs = explicit_part * u_n;
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += f_next[i];
  return solve_spd(lhs, rhs, solver, u_n);
}

FieldTrajectory run_direct(const Discretization& disc,
                           const CoefficientFunction& p, const TimeGrid& grid,
                           DirectScheme scheme, const SolverOptions& solver) {
  FieldTrajectory traj{grid, {}};
  traj.states.reserve(grid.steps() + 1);
  traj.states.push_back(
      project_initial(disc.forms, disc.mesh, disc.spec.initial, solver));
  const double tau = grid.tau();
  for (std::size_t n = 0; n < grid.steps(); ++n) {
    const Vector f_next = disc.load(grid.t(n + 1));
    const Vector& u_n = traj.states.back();
    Vector u_next =
        scheme == DirectScheme::kImplicit
            ? step_implicit(disc.forms, u_n, p(grid.t(n + 1)), f_next, tau,
                            solver)
            : step_crank_nicolson(disc.forms, u_n, p(grid.t(n)),
                                  p(grid.t(n + 1)), f_next, tau, solver);
    traj.states.push_back(std::move(u_next));
  }
  return traj;
}

FieldTrajectory run_direct(const Mesh& mesh, const ProblemSpec& spec,
                           const CoefficientFunction& p, const TimeGrid& grid,
                           DirectScheme scheme, const SolverOptions& solver) {
  return run_direct(Discretization::build(mesh, spec), p, grid, scheme, solver);
}

std::vector<double> record_observations(const FieldTrajectory& traj,
                                        const ObservationFunctional& obs,
                                        double noise_level,
                                        std::uint64_t seed) {
  if (!(noise_level >= 0.0)) {
    throw InvalidInput("noise level must be nonnegative");
  }
  std::vector<double> series;
  series.reserve(traj.states.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& u : traj.states) {
    double v = obs.apply(u);
    if (noise_level > 0.0) v *= 1.0 + noise_level * normal(rng);
    series.push_back(v);
  }
  return series;
}

std::vector<double> subsample(std::span<const double> fine_series,
                              std::size_t coarse_steps) {
  if (fine_series.size() < 2 || coarse_steps == 0) {
    throw InvalidInput("subsample: empty series or zero coarse steps");
  }
  const std::size_t fine_steps = fine_series.size() - 1;
  if (fine_steps % coarse_steps != 0) {
    throw InvalidInput("subsample: coarse step count " +
                       std::to_string(coarse_steps) + " does not divide " +
                       std::to_string(fine_steps));
  }
  const std::size_t stride = fine_steps / coarse_steps;
  std::vector<double> out;
  out.reserve(coarse_steps + 1);
  for (std::size_t n = 0; n <= coarse_steps; ++n) {
    out.push_back(fine_series[n * stride]);
  }
  return out;
}

void write_observations_csv(std::ostream& out, const TimeGrid& grid,
                            std::span<const double> series) {
  out << "t,value\n";
  for (std::size_t n = 0; n < series.size(); ++n) {
    out << csv::format(grid.t(n)) << ',' << csv::format(series[n]) << '\n';
  }
}

std::pair<TimeGrid, std::vector<double>> read_observations_csv(
    std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::split(line) !=
                                     std::vector<std::string>{"t", "value"}) {
    throw InvalidInput("observation CSV must start with header 't,value'");
  }
  std::vector<double> times, values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    if (fields.size() != 2) {
      throw InvalidInput("observation CSV: expected 2 fields, got '" + line +
                         "'");
    }
    times.push_back(csv::parse_double(fields[0]));
    values.push_back(csv::parse_double(fields[1]));
  }
  if (times.size() < 2 || times.front() != 0.0) {
    throw InvalidInput("observation CSV needs >= 2 rows starting at t = 0");
  }
  const std::size_t steps = times.size() - 1;
  TimeGrid grid(times.back(), steps);
  for (std::size_t n = 0; n <= steps; ++n) {
    if (std::abs(times[n] - grid.t(n)) > 1e-9 * grid.final_time()) {
      throw InvalidInput("observation CSV times are not uniform");
    }
  }
  return {grid, std::move(values)};
}

void write_field_csv(std::ostream& out, const FieldTrajectory& traj) {
  out << 't';
  const std::size_t n = traj.states.empty() ? 0 : traj.states[0].size();
  for (std::size_t i = 0; i < n; ++i) out << ",node_" << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << csv::format(traj.grid.t(k));
    for (double v : traj.states[k]) out << ',' << csv::format(v);
    out << '\n';
  }
}

}  // namespace coefid
