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


#include <benchmark/benchmark.h>

#include <map>

#include "coefid/direct_solver.hpp"
#include "coefid/inverse_solver.hpp"

namespace {

using namespace coefid;

const Mesh& mesh_for(double h) {
  static std::map<double, Mesh> cache;
  auto it = cache.find(h);
  if (it == cache.end()) {
    it = cache.emplace(h, triangulate(PolygonSpec::trapezoid(), h)).first;
  }
  return it->second;
}

double edge_length(const benchmark::State& state) {
  return 1.0 / static_cast<double>(state.range(0));
}

void BM_Triangulate(benchmark::State& state) {
  const double h = edge_length(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(triangulate(PolygonSpec::trapezoid(), h));
  }
}
BENCHMARK(BM_Triangulate)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_Assemble(benchmark::State& state) {
  const auto& mesh = mesh_for(edge_length(state));
  const auto spec = ProblemSpec::reference();
  for (auto _ : state) benchmark::DoNotOptimize(assemble(mesh, spec));
  state.counters["nodes"] = static_cast<double>(mesh.num_nodes());
}
BENCHMARK(BM_Assemble)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_SolveSpd(benchmark::State& state) {
  const auto& mesh = mesh_for(edge_length(state));
  const auto forms = assemble(mesh, ProblemSpec::reference());
  const double tau = 1e-4;
  const auto a = axpy_combine({{1.0 / tau, &forms.mass},
                               {1.0, &forms.stiffness},
                               {1.0, &forms.boundary}});
  const Vector b = forms.mass * Vector(forms.size(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_spd(a, b));
  state.counters["nodes"] = static_cast<double>(mesh.num_nodes());
}
BENCHMARK(BM_SolveSpd)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMicrosecond);

void BM_InverseStep(benchmark::State& state) {
  const auto disc = Discretization::build(mesh_for(1.0 / 30.0), ProblemSpec::reference());
  const auto obs =
      build_observation(disc.mesh, PointEval{PolygonSpec::trapezoid().centroid()});
  const auto scheme = static_cast<SchemeKind>(state.range(0));
  const Vector u(disc.forms.size(), 1.0), f(disc.forms.size(), 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        step_inverse(disc.forms, u, 5.0, f, 1e-4, scheme, obs, 0.999, 1e-14));
  }
  state.SetLabel(to_string(scheme));
}
BENCHMARK(BM_InverseStep)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_IdentifyFirstOrder(benchmark::State& state) {
  const auto disc = Discretization::build(mesh_for(0.034), ProblemSpec::reference());
  const auto obs =
      build_observation(disc.mesh, PointEval{PolygonSpec::trapezoid().centroid()});
  const TimeGrid grid(0.1, static_cast<std::size_t>(state.range(0)));
  const auto phi = record_observations(
      run_direct(disc, CoefficientFunction::switched_ramp(0.1), grid,
                 DirectScheme::kImplicit),
      obs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(identify(disc, grid, SchemeKind::kFirstOrder, obs, phi));
  }
}
BENCHMARK(BM_IdentifyFirstOrder)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
