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

/**
 * @file inverse_solver.hpp
 *
 * @brief Identification of the time-dependent lower coefficient p(t).
 *
 * Every linearized scheme keeps the new state linear in the new coefficient,
 * so a step splits as
 *
 *     u^{n+1} = y^{n+1} + p^{n+1} w^{n+1},
 *
 * where y and w solve two p-independent SPD systems with the same matrix.
 * The observation r . u^{n+1} = phi^{n+1} then fixes p^{n+1} by
 *
 *     p^{n+1} = (phi^{n+1} - r . y) / (r . w).
 *
 * Schemes (S = M/tau + K + B, Sh = M/tau + K/2 + B/2):
 *   - FirstOrder:     S u^{n+1} + p^{n+1} M u^n = M u^n / tau + F
 *   - CrankNicolson:  (Sh + p^n M/2) u^{n+1} + p^{n+1} M u^n / 2
 *                        = (M/tau - K/2 - B/2) u^n + F
 *   - HybridImplicit: (S + p^n M/2) u^{n+1} + p^{n+1} M u^n / 2
 *                        = M u^n / tau + F
 *
 * Two independent routes are provided for cross-checking: the exponential
 * substitution v = chi u that removes p from the equation, and a
 * Newton-type fixed point on the fully implicit nonlinear step.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coefid/direct_solver.hpp"
#include "coefid/fem_assembly.hpp"
#include "coefid/sparse_linalg.hpp"

namespace coefid {

enum class SchemeKind { kFirstOrder, kCrankNicolson, kHybridImplicit };

inline constexpr SchemeKind kAllSchemes[] = {SchemeKind::kFirstOrder,
                                             SchemeKind::kCrankNicolson,
                                             SchemeKind::kHybridImplicit};

std::string to_string(SchemeKind scheme);
SchemeKind parse_scheme(const std::string& name);

struct DecompositionPair {
  Vector y;
  Vector w;
};

/// (M/tau + K + B) y = M u^n / tau + F_next.
Vector solve_y_first_order(const AssembledForms& forms,
                           std::span<const double> u_n,
                           std::span<const double> f_next, double tau,
                           const SolverOptions& solver = {});

/// (M/tau + K + B) w = -M u^n.
Vector solve_w_first_order(const AssembledForms& forms,
                           std::span<const double> u_n, double tau,
                           const SolverOptions& solver = {});

/// p = (phi_next - r.y) / (r.w). Throws DegenerateObservation (tagged with
/// `step`) unless |r.w| > threshold.
double recover_p(std::span<const double> y, std::span<const double> w,
                 const ObservationFunctional& obs, double phi_next,
                 double threshold, std::size_t step = 0);

/// Default degeneracy threshold 1e-14 * scale / tau.
double default_threshold(double tau, double field_scale);

struct InverseStep {
  Vector u_next;
  double p_next = 0.0;
  DecompositionPair pair;
  double w_functional = 0.0;
  /// ||scheme residual at (u_next, p_next)|| / ||right-hand side||.
  double residual = 0.0;
};

/// One step of the chosen linearized scheme. `p_n` is ignored by FirstOrder.
/// Throws IndefiniteSystem when 1/tau + p_n/2 <= 0 (CrankNicolson,
/// HybridImplicit) and DegenerateObservation from the recovery.
InverseStep step_inverse(const AssembledForms& forms,
                         std::span<const double> u_n, double p_n,
                         std::span<const double> f_next, double tau,
                         SchemeKind scheme, const ObservationFunctional& obs,
                         double phi_next, double threshold,
                         std::size_t step = 0,
                         const SolverOptions& solver = {});

/// Relative residual of the scheme equation at (u_next, p_next).
double scheme_residual(const AssembledForms& forms, SchemeKind scheme,
                       std::span<const double> u_n, double p_n,
                       std::span<const double> f_next, double tau,
                       std::span<const double> u_next, double p_next);

/// How p^0 is chosen for the schemes that reference p^n at n = 0.
enum class InitialCoefficient {
  /// Use IdentifyOptions::p0 as given.
  kGiven,
  /// The value one FirstOrder step recovers at n = 0.
  kFirstOrderStep,
  /// Differentiate the observation at t = 0 (one-sided second-order
  /// difference) and solve the semi-discrete equation for p(0).
  kObservationDerivative,
};

struct IdentifyOptions {
  InitialCoefficient initial = InitialCoefficient::kObservationDerivative;
  double p0 = 0.0;
  /// Degeneracy threshold; unset selects default_threshold(tau, ||u^0||_inf).
  std::optional<double> threshold;
  SolverOptions solver;
};

struct StepDiagnostics {
  double w_functional = 0.0;
  double residual = 0.0;
  std::size_t iterations = 1;
};

struct IdentificationResult {
  /// p_series[n] is the coefficient at t^n; entry 0 is the p^0 that was used
  /// (zero for schemes that do not reference it).
  std::vector<double> p_series;
  FieldTrajectory trajectory;
  /// One entry per step n -> n+1.
  std::vector<StepDiagnostics> diagnostics;
};

/// Runs the linearized scheme over the whole grid. `phi` holds phi^0..phi^N.
/// Any failing step aborts with its exception (which names the step).
IdentificationResult identify(const Discretization& disc, const TimeGrid& grid,
                              SchemeKind scheme,
                              const ObservationFunctional& obs,
                              std::span<const double> phi,
                              const IdentifyOptions& options = {});

/// Resolves p^0 according to `options.initial`.
double initial_coefficient(const Discretization& disc, const TimeGrid& grid,
                           std::span<const double> u0,
                           const ObservationFunctional& obs,
                           std::span<const double> phi,
                           const IdentifyOptions& options);

struct TransformState {
  std::vector<double> chi;   // chi^0 .. chi^N, chi^0 = 1
  std::vector<Vector> v;     // v^0 .. v^N
};

/// Identification through v = chi u, chi = exp(int_0^t p). v is marched
/// with the p-free implicit scheme (source weighted with the lagged chi^n),
/// chi^{n+1} = r.v^{n+1} / phi^{n+1}, u = v / chi and
/// p^{n+1} = ln(chi^{n+1} / chi^n) / tau.
/// Throws TransformDegenerate when phi^{n+1} is near zero or chi <= 0.
std::pair<TransformState, IdentificationResult> solve_via_transform(
    const Discretization& disc, const TimeGrid& grid,
    const ObservationFunctional& obs, std::span<const double> phi,
    const SolverOptions& solver = {});

struct FixedPointOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 50;
  std::optional<double> threshold;
  SolverOptions solver;
};

/// Fully implicit nonlinear scheme
///   (M/tau + K + B + p^{n+1} M) u^{n+1} = M u^n / tau + F,  r.u^{n+1} = phi
/// solved per step by iterating the y/w recovery around the current iterate
/// (u_k, p_k) until |p_{k+1} - p_k| <= tol (1 + |p_{k+1}|).
/// Throws FixedPointNoConvergence with the iterate history.
IdentificationResult solve_nonlinear_implicit(
    const Discretization& disc, const TimeGrid& grid,
    const ObservationFunctional& obs, std::span<const double> phi,
    const FixedPointOptions& options = {});

/// Marches a linearized scheme forward with a prescribed coefficient series
/// p[0..N]. Data produced this way is reproduced exactly by identify() on
/// the same grid, which makes it a consistency check of the recovery.
FieldTrajectory march_linearized(const Discretization& disc,
                                 const TimeGrid& grid, SchemeKind scheme,
                                 std::span<const double> p,
                                 const SolverOptions& solver = {});

/// CSV with header `t,p_recovered[,p_exact],w_functional,residual`, one row
/// per step n = 1..N.
void write_identification_csv(std::ostream& out,
                              const IdentificationResult& result,
                              const CoefficientFunction* exact = nullptr);

}  // namespace coefid
