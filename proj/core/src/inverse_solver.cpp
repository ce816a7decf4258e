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

#include "coefid/inverse_solver.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "coefid/csv.hpp"
#include "coefid/errors.hpp"

namespace coefid {

namespace {

// The scheme equation in the form  a u + p_next * coupling = rhs.
struct SchemeSystem {
  SparseMatrix a;
  Vector rhs;
  Vector coupling;
};

SchemeSystem scheme_system(const AssembledForms& forms, SchemeKind scheme,
                           std::span<const double> u_n, double p_n,
                           std::span<const double> f_next, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("time step must be positive");
  const std::size_t n = forms.size();
  if (u_n.size() != n || f_next.size() != n) {
    throw DimensionMismatch("inverse step: vector size mismatch");
  }
  const Vector mu = forms.mass * u_n;

  if (scheme == SchemeKind::kFirstOrder) {
    SchemeSystem sys{axpy_combine({{1.0 / tau, &forms.mass},
                                   {1.0, &forms.stiffness},
                                   {1.0, &forms.boundary}}),
                     Vector(n), mu};
    for (std::size_t i = 0; i < n; ++i) sys.rhs[i] = mu[i] / tau + f_next[i];
    return sys;
  }

  if (!(1.0 / tau + 0.5 * p_n > 0.0)) {
    throw IndefiniteSystem(to_string(scheme) + " step: 1/tau + p^n/2 = " +
                           std::to_string(1.0 / tau + 0.5 * p_n) +
                           " leaves the system indefinite");
  }
  const double half_coupling = 0.5;
  Vector coupling(n);
  for (std::size_t i = 0; i < n; ++i) coupling[i] = half_coupling * mu[i];

  if (scheme == SchemeKind::kCrankNicolson) {
    SparseMatrix a = axpy_combine({{1.0 / tau + 0.5 * p_n, &forms.mass},
                                   {0.5, &forms.stiffness},
                                   {0.5, &forms.boundary}});
    const SparseMatrix explicit_part =
        axpy_combine({{1.0 / tau, &forms.mass},
                      {-0.5, &forms.stiffness},
                      {-0.5, &forms.boundary}});
    Vector rhs = explicit_part * u_n;
    for (std::size_t i = 0; i < n; ++i) rhs[i] += f_next[i];
    return {std::move(a), std::move(rhs), std::move(coupling)};
  }

  SparseMatrix a = axpy_combine({{1.0 / tau + 0.5 * p_n, &forms.mass},
                                 {1.0, &forms.stiffness},
                                 {1.0, &forms.boundary}});
  Vector rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = mu[i] / tau + f_next[i];
  return {std::move(a), std::move(rhs), std::move(coupling)};
}

double relative_residual(const SchemeSystem& sys,
                         std::span<const double> u_next, double p_next) {
  Vector r = sys.a * u_next;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] += p_next * sys.coupling[i] - sys.rhs[i];
  }
  const double scale =
      norm2(sys.rhs) + std::abs(p_next) * norm2(sys.coupling);
  return scale > 0.0 ? norm2(r) / scale : norm2(r);
}

void require_series_length(std::span<const double> phi, const TimeGrid& grid) {
  if (phi.size() != grid.steps() + 1) {
    throw InvalidInput("observation series has " + std::to_string(phi.size()) +
                       " entries, time grid needs " +
                       std::to_string(grid.steps() + 1));
  }
}

[[noreturn]] void rethrow_with_step(std::size_t step) {
  try {
    throw;
  } catch (const IndefiniteSystem& e) {
    throw IndefiniteSystem("step " + std::to_string(step) + ": " + e.what());
  } catch (const NoConvergence& e) {
    throw NoConvergence("step " + std::to_string(step) + ": " + e.what(),
                        e.final_residual(), e.iterations());
  }
}

}  // namespace

std::string to_string(SchemeKind scheme) {
  switch (scheme) {
    case SchemeKind::kFirstOrder:
      return "first_order";
    case SchemeKind::kCrankNicolson:
      return "crank_nicolson";
    case SchemeKind::kHybridImplicit:
      return "hybrid_implicit";
  }
  return "unknown";
}

SchemeKind parse_scheme(const std::string& name) {
  for (auto s : kAllSchemes) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown scheme '" + name +
                     "' (expected first_order, crank_nicolson or "
                     "hybrid_implicit)");
}

Vector solve_y_first_order(const AssembledForms& forms,
                           std::span<const double> u_n,
                           std::span<const double> f_next, double tau,
                           const SolverOptions& solver) {
  const auto sys =
      scheme_system(forms, SchemeKind::kFirstOrder, u_n, 0.0, f_next, tau);
  return solve_spd(sys.a, sys.rhs, solver, u_n);
}

Vector solve_w_first_order(const AssembledForms& forms,
                           std::span<const double> u_n, double tau,
                           const SolverOptions& solver) {
  const Vector zero(forms.size(), 0.0);
  auto sys = scheme_system(forms, SchemeKind::kFirstOrder, u_n, 0.0, zero, tau);
  for (auto& c : sys.coupling) c = -c;
  return solve_spd(sys.a, sys.coupling, solver);
}

double default_threshold(double tau, double field_scale) {
  return 1e-14 * field_scale / tau;
}

double recover_p(std::span<const double> y, std::span<const double> w,
                 const ObservationFunctional& obs, double phi_next,
                 double threshold, std::size_t step) {
  const double rw = obs.apply(w);
  if (!(std::abs(rw) > threshold)) {
    throw DegenerateObservation(
        "step " + std::to_string(step) + ": observation of w is " +
            csv::format(rw) + ", not above threshold " +
            csv::format(threshold) + "; the coefficient is not identifiable",
        step, rw);
  }
  return (phi_next - obs.apply(y)) / rw;
}

InverseStep step_inverse(const AssembledForms& forms,
                         std::span<const double> u_n, double p_n,
                         std::span<const double> f_next, double tau,
                         SchemeKind scheme, const ObservationFunctional& obs,
                         double phi_next, double threshold, std::size_t step,
                         const SolverOptions& solver) {
  SchemeSystem sys = scheme_system(forms, scheme, u_n, p_n, f_next, tau);
  Vector neg_coupling(sys.coupling.size());
  for (std::size_t i = 0; i < neg_coupling.size(); ++i) {
    neg_coupling[i] = -sys.coupling[i];
  }
  InverseStep out;
  out.pair.y = solve_spd(sys.a, sys.rhs, solver, u_n);
  out.pair.w = solve_spd(sys.a, neg_coupling, solver);
  out.w_functional = obs.apply(out.pair.w);
  out.p_next =
      recover_p(out.pair.y, out.pair.w, obs, phi_next, threshold, step);
  out.u_next = out.pair.y;
  for (std::size_t i = 0; i < out.u_next.size(); ++i) {
    out.u_next[i] += out.p_next * out.pair.w[i];
  }
  out.residual = relative_residual(sys, out.u_next, out.p_next);
  return out;
}

double scheme_residual(const AssembledForms& forms, SchemeKind scheme,
                       std::span<const double> u_n, double p_n,
                       std::span<const double> f_next, double tau,
                       std::span<const double> u_next, double p_next) {
  return relative_residual(scheme_system(forms, scheme, u_n, p_n, f_next, tau),
                           u_next, p_next);
}

double initial_coefficient(const Discretization& disc, const TimeGrid& grid,
                           std::span<const double> u0,
                           const ObservationFunctional& obs,
                           std::span<const double> phi,
                           const IdentifyOptions& options) {
  require_series_length(phi, grid);
  const double tau = grid.tau();
  const double threshold =
      options.threshold.value_or(default_threshold(tau, norm_inf(u0)));
  switch (options.initial) {
    case InitialCoefficient::kGiven:
      return options.p0;
    case InitialCoefficient::kFirstOrderStep: {
      const Vector f1 = disc.load(grid.t(1));
      return step_inverse(disc.forms, u0, 0.0, f1, tau,
                          SchemeKind::kFirstOrder, obs, phi[1], threshold, 0,
                          options.solver)
          .p_next;
    }
    case InitialCoefficient::kObservationDerivative: {
      // Semi-discrete: M u' = F - (K + B) u - p M u, observed via r.
      const double dphi =
          grid.steps() >= 2
              ? (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * tau)
              : (phi[1] - phi[0]) / tau;
      Vector rhs = disc.load(0.0);
      const Vector ku = disc.forms.stiffness * u0;
      const Vector bu = disc.forms.boundary * u0;
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= ku[i] + bu[i];
      const Vector drift = solve_spd(disc.forms.mass, rhs, options.solver);
      const double ru = obs.apply(u0);
      if (!(std::abs(ru) > threshold)) {
        throw DegenerateObservation(
            "step 0: observation of the initial state vanishes", 0, ru);
      }
      return (obs.apply(drift) - dphi) / ru;
    }
  }
  return options.p0;
}

IdentificationResult identify(const Discretization& disc, const TimeGrid& grid,
                              SchemeKind scheme,
                              const ObservationFunctional& obs,
                              std::span<const double> phi,
                              const IdentifyOptions& options) {
  require_series_length(phi, grid);
  const double tau = grid.tau();
  IdentificationResult result{{}, {grid, {}}, {}};
  result.trajectory.states.reserve(grid.steps() + 1);
  result.trajectory.states.push_back(project_initial(
      disc.forms, disc.mesh, disc.spec.initial, options.solver));
  const Vector& u0 = result.trajectory.states.front();
  const double threshold =
      options.threshold.value_or(default_threshold(tau, norm_inf(u0)));

  double p_n = 0.0;
  if (scheme != SchemeKind::kFirstOrder) {
    p_n = initial_coefficient(disc, grid, u0, obs, phi, options);
  }
  result.p_series.push_back(p_n);

  for (std::size_t n = 0; n < grid.steps(); ++n) {
    InverseStep s;
    try {
      const Vector f_next = disc.load(grid.t(n + 1));
      s = step_inverse(disc.forms, result.trajectory.states[n], p_n, f_next,
                       tau, scheme, obs, phi[n + 1], threshold, n + 1,
                       options.solver);
    } catch (const DegenerateObservation&) {
      throw;
    } catch (const NumericalError&) {
      rethrow_with_step(n + 1);
    }
    p_n = s.p_next;
    result.p_series.push_back(s.p_next);
    result.diagnostics.push_back({s.w_functional, s.residual, 1});
    result.trajectory.states.push_back(std::move(s.u_next));
  }
  return result;
}

std::pair<TransformState, IdentificationResult> solve_via_transform(
    const Discretization& disc, const TimeGrid& grid,
    const ObservationFunctional& obs, std::span<const double> phi,
    const SolverOptions& solver) {
  require_series_length(phi, grid);
  const double tau = grid.tau();
  const auto& forms = disc.forms;
  const SparseMatrix a = axpy_combine({{1.0 / tau, &forms.mass},
                                       {1.0, &forms.stiffness},
                                       {1.0, &forms.boundary}});
  const double phi_scale = norm_inf(phi);

  TransformState state;
  IdentificationResult result{{0.0}, {grid, {}}, {}};
  state.chi.push_back(1.0);
  state.v.push_back(
      project_initial(forms, disc.mesh, disc.spec.initial, solver));
  result.trajectory.states.push_back(state.v.front());

  for (std::size_t n = 0; n < grid.steps(); ++n) {
    const Vector f_next = disc.load(grid.t(n + 1));
    const double chi_n = state.chi.back();
    Vector rhs = forms.mass * state.v.back();
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      rhs[i] = rhs[i] / tau + chi_n * f_next[i];
    }
    Vector v_next;
    try {
      v_next = solve_spd(a, rhs, solver, state.v.back());
    } catch (const NumericalError&) {
      rethrow_with_step(n + 1);
    }
    const double phi_next = phi[n + 1];
    if (!(std::abs(phi_next) > 1e-14 * phi_scale)) {
      throw TransformDegenerate("step " + std::to_string(n + 1) +
                                    ": observation is zero, chi undefined",
                                n + 1);
    }
    const double chi_next = obs.apply(v_next) / phi_next;
    if (!(chi_next > 0.0) || !std::isfinite(chi_next)) {
      throw TransformDegenerate("step " + std::to_string(n + 1) +
                                    ": chi = " + csv::format(chi_next) +
                                    " is not positive",
                                n + 1);
    }
    Vector u_next = v_next;
    for (auto& x : u_next) x /= chi_next;

    Vector res = a * v_next;
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= rhs[i];
    const double bn = norm2(rhs);

    result.p_series.push_back(std::log(chi_next / chi_n) / tau);
    result.diagnostics.push_back({0.0, bn > 0.0 ? norm2(res) / bn : 0.0, 1});
    result.trajectory.states.push_back(std::move(u_next));
    state.chi.push_back(chi_next);
    state.v.push_back(std::move(v_next));
  }
  return {std::move(state), std::move(result)};
}

IdentificationResult solve_nonlinear_implicit(
    const Discretization& disc, const TimeGrid& grid,
    const ObservationFunctional& obs, std::span<const double> phi,
    const FixedPointOptions& options) {
  require_series_length(phi, grid);
  if (!(options.tolerance > 0.0) || options.max_iterations == 0) {
    throw InvalidInput("fixed point needs a positive tolerance and >= 1 "
                       "iteration");
  }
  const double tau = grid.tau();
  const auto& forms = disc.forms;
  IdentificationResult result{{0.0}, {grid, {}}, {}};
  result.trajectory.states.push_back(
      project_initial(forms, disc.mesh, disc.spec.initial, options.solver));
  const double threshold = options.threshold.value_or(
      default_threshold(tau, norm_inf(result.trajectory.states.front())));

  double p_guess = 0.0;
  for (std::size_t n = 0; n < grid.steps(); ++n) {
    const Vector& u_n = result.trajectory.states[n];
    const Vector f_next = disc.load(grid.t(n + 1));
    Vector rhs = forms.mass * u_n;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      rhs[i] = rhs[i] / tau + f_next[i];
    }

    double p_k = p_guess;
    Vector u_k = u_n;
    std::vector<double> history{p_k};
    bool converged = false;
    StepDiagnostics diag;
    for (std::size_t k = 1; k <= options.max_iterations; ++k) {
      if (!(1.0 / tau + p_k > 0.0)) {
        throw IndefiniteSystem("step " + std::to_string(n + 1) +
                               ": fixed-point iterate p = " +
                               csv::format(p_k) +
                               " makes the implicit system indefinite");
      }
      const SparseMatrix a = axpy_combine({{1.0 / tau + p_k, &forms.mass},
                                           {1.0, &forms.stiffness},
                                           {1.0, &forms.boundary}});
      Vector neg_mu = forms.mass * u_k;
      for (auto& x : neg_mu) x = -x;
      Vector y, w;
      try {
        y = solve_spd(a, rhs, options.solver, u_k);
        w = solve_spd(a, neg_mu, options.solver);
      } catch (const NumericalError&) {
        rethrow_with_step(n + 1);
      }
      const double q = recover_p(y, w, obs, phi[n + 1], threshold, n + 1);
      for (std::size_t i = 0; i < u_k.size(); ++i) u_k[i] = y[i] + q * w[i];
      const double p_next = p_k + q;
      history.push_back(p_next);
      diag.w_functional = obs.apply(w);
      diag.iterations = k;
      const bool done =
          std::abs(p_next - p_k) <= options.tolerance * (1.0 + std::abs(p_next));
      p_k = p_next;
      if (done) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw FixedPointNoConvergence(
          "step " + std::to_string(n + 1) + ": fixed point did not converge in " +
              std::to_string(options.max_iterations) + " iterations",
          n + 1, std::move(history));
    }

    // Residual of the nonlinear implicit equation at the final iterate.
    const SparseMatrix a = axpy_combine({{1.0 / tau + p_k, &forms.mass},
                                         {1.0, &forms.stiffness},
                                         {1.0, &forms.boundary}});
    Vector res = a * u_k;
    for (std::size_t i = 0; i < res.size(); ++i) res[i] -= rhs[i];
    diag.residual = norm2(res) / norm2(rhs);

    result.p_series.push_back(p_k);
    result.diagnostics.push_back(diag);
    result.trajectory.states.push_back(std::move(u_k));
    p_guess = p_k;
  }
  return result;
}

FieldTrajectory march_linearized(const Discretization& disc,
                                 const TimeGrid& grid, SchemeKind scheme,
                                 std::span<const double> p,
                                 const SolverOptions& solver) {
  if (p.size() != grid.steps() + 1) {
    throw InvalidInput("coefficient series must have N + 1 entries");
  }
  FieldTrajectory traj{grid, {}};
  traj.states.push_back(
      project_initial(disc.forms, disc.mesh, disc.spec.initial, solver));
  for (std::size_t n = 0; n < grid.steps(); ++n) {
    const Vector f_next = disc.load(grid.t(n + 1));
    SchemeSystem sys =
        scheme_system(disc.forms, scheme, traj.states[n], p[n], f_next,
                      grid.tau());
    for (std::size_t i = 0; i < sys.rhs.size(); ++i) {
      sys.rhs[i] -= p[n + 1] * sys.coupling[i];
    }
    traj.states.push_back(solve_spd(sys.a, sys.rhs, solver, traj.states[n]));
  }
  return traj;
}

void write_identification_csv(std::ostream& out,
                              const IdentificationResult& result,
                              const CoefficientFunction* exact) {
  out << "t,p_recovered";
  if (exact) out << ",p_exact";
  out << ",w_functional,residual\n";
  const auto& grid = result.trajectory.grid;
  for (std::size_t n = 1; n < result.p_series.size(); ++n) {
    const double t = grid.t(n);
    out << csv::format(t) << ',' << csv::format(result.p_series[n]);
    if (exact) out << ',' << csv::format((*exact)(t));
    const auto& d = result.diagnostics[n - 1];
    out << ',' << csv::format(d.w_functional) << ',' << csv::format(d.residual)
        << '\n';
  }
}

}  // namespace coefid
