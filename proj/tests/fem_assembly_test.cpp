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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coefid/errors.hpp"
#include "coefid/fem_assembly.hpp"
#include "support/oracles.hpp"

namespace coefid {
namespace {

using testing::random_vector;

constexpr Point kA{0, 0}, kB{1, 0}, kC{0, 1};

SpatialFunction constant(double c) {
  return [c](const Point&) { return c; };
}

// Analytic P1 mass of a triangle: (area / 12) [[2,1,1],[1,2,1],[1,1,2]].
double analytic_mass(const Point& a, const Point& b, const Point& c,
                     std::size_t i, std::size_t j) {
  return signed_area(a, b, c) / 12.0 * (i == j ? 2.0 : 1.0);
}

TEST(ElementMatrices, UnitRightTriangle) {
  const auto k = element_stiffness(kA, kB, kC, constant(1.0));
  const double expected_k[3][3] = {
      {1, -0.5, -0.5}, {-0.5, 0.5, 0}, {-0.5, 0, 0.5}};
  const auto m = element_mass(kA, kB, kC);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(k[i][j], expected_k[i][j], 1e-14);
      EXPECT_NEAR(m[i][j], (0.5 / 12.0) * (i == j ? 2.0 : 1.0), 1e-14);
    }
  }
}

TEST(ElementMatrices, RandomTrianglesMatchAnalyticMass) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    Point a{u(gen), u(gen)}, b{u(gen), u(gen)}, c{u(gen), u(gen)};
    if (signed_area(a, b, c) < 0) std::swap(b, c);
    if (signed_area(a, b, c) < 1e-3) continue;
    const auto m = element_mass(a, b, c);
    const auto k = element_stiffness(a, b, c, constant(2.5));
    for (std::size_t i = 0; i < 3; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(m[i][j], analytic_mass(a, b, c, i, j), 1e-13);
        EXPECT_NEAR(k[i][j], k[j][i], 1e-13);
        row += k[i][j];
      }
      EXPECT_NEAR(row, 0.0, 1e-12);
    }
  }
}

TEST(ElementMatrices, NonPositiveDiffusionRejected) {
  EXPECT_THROW(element_stiffness(kA, kB, kC, constant(0.0)),
               InvalidCoefficient);
  EXPECT_THROW(element_stiffness(kA, kB, kC, [](const Point& p) {
                 return p.x - 0.1;  // negative at one mid-edge point
               }),
               InvalidCoefficient);
}

TEST(Assemble, FormsInvariantsOnPaperMesh) {
  const auto& disc = testing::paper_discretization();
  const auto& f = disc.forms;
  const auto poly = PolygonSpec::trapezoid();
  EXPECT_TRUE(f.mass.is_symmetric(1e-13));
  EXPECT_TRUE(f.stiffness.is_symmetric(1e-13));
  EXPECT_TRUE(f.boundary.is_symmetric(1e-13));
  EXPECT_EQ(f.mass.shared_pattern(), f.stiffness.shared_pattern());
  EXPECT_EQ(f.mass.shared_pattern(), f.boundary.shared_pattern());

  const std::vector<double> ones(f.size(), 1.0);
  EXPECT_LE(norm_inf(f.stiffness * ones), 1e-12);

  double mass_total = 0.0;
  for (double r : f.mass.row_sums()) {
    EXPECT_GT(r, 0.0);
    mass_total += r;
  }
  EXPECT_NEAR(mass_total, poly.area(), 1e-12 * poly.area());

  double boundary_total = 0.0;
  for (double v : f.boundary.values()) boundary_total += v;
  EXPECT_NEAR(boundary_total, 10.0 * poly.perimeter(), 1e-11);
}

TEST(Assemble, QuadraticFormsHaveTheRightSign) {
  const auto& f = testing::paper_discretization().forms;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto u = random_vector(f.size(), seed);
    EXPECT_GT(dot(u, f.mass * u), 0.0);
    EXPECT_GE(dot(u, f.stiffness * u), -1e-12);
    EXPECT_GE(dot(u, f.boundary * u), -1e-12);
  }
}

TEST(Assemble, StiffnessEnergyOfLinearField) {
  // For u = a x + b y, u.K u = k |grad u|^2 |domain|.
  const auto& disc = testing::paper_discretization();
  std::vector<double> u(disc.mesh.num_nodes());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = 2.0 * disc.mesh.nodes[i].x - 3.0 * disc.mesh.nodes[i].y;
  }
  EXPECT_NEAR(dot(u, disc.forms.stiffness * u),
              13.0 * PolygonSpec::trapezoid().area(), 1e-10);
}

TEST(Assemble, NegativeBoundaryCoefficientRejected) {
  EXPECT_THROW(assemble(testing::square_mesh(),
                        ProblemSpec::constant(1.0, -1.0, 0.0, 1.0)),
               InvalidCoefficient);
}

TEST(Assemble, InvalidMeshRejected) {
  auto mesh = testing::square_mesh();
  mesh.triangles[0][0] = 42;
  EXPECT_THROW(assemble(mesh, ProblemSpec::reference()), InvalidInput);
}

TEST(AssembleLoad, Examples) {
  const auto tri = testing::unit_triangle_mesh();
  const auto zero = assemble_load(tri, constant(0.0));
  for (double v : zero) EXPECT_EQ(v, 0.0);
  const auto one = assemble_load(tri, constant(1.0));
  for (double v : one) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);

  const auto square = triangulate(PolygonSpec::unit_square(), 0.2);
  const auto fx = assemble_load(square, [](const Point& p) { return p.x; });
  double total = 0.0;
  for (double v : fx) total += v;
  EXPECT_NEAR(total, 0.5, 1e-13);
}

TEST(AssembleLoad, LinearSourceEqualsMassTimesInterpolant) {
  // For linear f the load is exactly M f_nodal; the mass matrix comes from
  // the analytic formula, independent of the quadrature rule.
  const auto mesh = triangulate(PolygonSpec::trapezoid(), 0.2);
  auto f = [](const Point& p) { return 1.0 + 3.0 * p.x - 2.0 * p.y; };
  const auto load = assemble_load(mesh, f);
  std::vector<double> oracle(mesh.num_nodes(), 0.0);
  for (const auto& t : mesh.triangles) {
    const Point& a = mesh.nodes[t[0]];
    const Point& b = mesh.nodes[t[1]];
    const Point& c = mesh.nodes[t[2]];
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        oracle[t[i]] += analytic_mass(a, b, c, i, j) * f(mesh.nodes[t[j]]);
      }
    }
  }
  EXPECT_LE(testing::max_abs_diff(load, oracle), 1e-14);
}

TEST(AssembleLoad, TimeDependentSource) {
  const auto tri = testing::unit_triangle_mesh();
  ProblemSpec spec = ProblemSpec::reference();
  spec.source = [](const Point&, double t) { return t; };
  for (double v : assemble_load(tri, spec, 3.0)) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(Observation, PointAtNodeIsUnitVector) {
  const auto mesh = testing::square_mesh();
  const auto r = build_observation(mesh, PointEval{{0.5, 0.5}});
  EXPECT_TRUE(r.is_point());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(r.weights()[i], i == 4 ? 1.0 : 0.0, 1e-15);
  }
}

TEST(Observation, PointAtCentroidHasEqualWeights) {
  const auto mesh = testing::square_mesh();
  const auto& n = mesh.nodes;
  const Point c{(n[0].x + n[1].x + n[4].x) / 3.0,
                (n[0].y + n[1].y + n[4].y) / 3.0};
  const auto r = build_observation(mesh, PointEval{c});
  for (std::size_t i : {0u, 1u, 4u}) EXPECT_NEAR(r.weights()[i], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.weights()[2], 0.0);
  EXPECT_EQ(r.weights()[3], 0.0);
}

TEST(Observation, UnitWeightOnSquare) {
  const auto mesh = triangulate(PolygonSpec::unit_square(), 0.25);
  const auto r = build_observation(mesh, WeightedIntegral{constant(1.0)});
  EXPECT_NEAR(r.apply(std::vector<double>(mesh.num_nodes(), 1.0)), 1.0, 1e-12);
  const auto mean = mean_value_observation(mesh);
  EXPECT_NEAR(mean.apply(std::vector<double>(mesh.num_nodes(), 2.0)), 2.0,
              1e-12);
}

TEST(Observation, OutsideAndBoundaryPointsRejected) {
  const auto mesh = testing::square_mesh();
  EXPECT_THROW(build_observation(mesh, PointEval{{2.0, 0.5}}), OutOfDomain);
  EXPECT_THROW(build_observation(mesh, PointEval{{0.0, 0.5}}), OutOfDomain);
  EXPECT_THROW(build_observation(mesh, PointEval{{NAN, 0.5}}), OutOfDomain);
}

TEST(Observation, SharedEdgeResolvedDeterministically) {
  const auto mesh = testing::square_mesh();
  // On the diagonal between triangles 0 and 1.
  const auto r = build_observation(mesh, PointEval{{0.75, 0.25}});
  EXPECT_NEAR(r.weights()[1], 0.5, 1e-15);
  EXPECT_NEAR(r.weights()[4], 0.5, 1e-15);
  EXPECT_NEAR(r.weights()[0], 0.0, 1e-15);
}

// Random interior points: at most 3 nonzeros summing to 1, exact on linear
// fields, and linear in the field.
TEST(Observation, RandomPointProperty) {
  const auto& mesh = testing::paper_discretization().mesh;
  const auto poly = PolygonSpec::trapezoid();
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> ux(0.0, 1.5), uy(0.0, 1.0);
  std::vector<double> lin(mesh.num_nodes());
  for (std::size_t i = 0; i < lin.size(); ++i) {
    lin[i] = 0.3 + 2.0 * mesh.nodes[i].x - 1.5 * mesh.nodes[i].y;
  }
  int checked = 0;
  while (checked < 200) {
    const Point x{ux(gen), uy(gen)};
    if (!poly.contains(x, -1e-6)) continue;
    ++checked;
    const auto r = build_observation(mesh, PointEval{x});
    int nonzeros = 0;
    double sum = 0.0;
    for (double w : r.weights()) {
      if (w != 0.0) ++nonzeros;
      sum += w;
    }
    EXPECT_LE(nonzeros, 3);
    EXPECT_NEAR(sum, 1.0, 1e-14);
    EXPECT_NEAR(r.apply(lin), 0.3 + 2.0 * x.x - 1.5 * x.y, 1e-13);

    const auto u = random_vector(mesh.num_nodes(), checked);
    const auto v = random_vector(mesh.num_nodes(), 1000 + checked);
    std::vector<double> comb(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) comb[i] = 2.0 * u[i] - 0.5 * v[i];
    EXPECT_NEAR(r.apply(comb), 2.0 * r.apply(u) - 0.5 * r.apply(v), 1e-13);
  }
}

TEST(Observation, WeightedIntegralOfLinearField) {
  const auto& mesh = testing::paper_discretization().mesh;
  const auto r = build_observation(mesh, WeightedIntegral{constant(1.0)});
  std::vector<double> x(mesh.num_nodes());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = mesh.nodes[i].x;
  // int x over the trapezoid: int_0^1.5 x (1 - x/3) dx = 1.125 - 0.375.
  EXPECT_NEAR(r.apply(x), 0.75, 1e-12);
}

TEST(Observation, SizeMismatch) {
  const auto r = build_observation(testing::square_mesh(), PointEval{{0.5, 0.5}});
  EXPECT_THROW(r.apply(std::vector<double>(3, 1.0)), DimensionMismatch);
}

}  // namespace
}  // namespace coefid
