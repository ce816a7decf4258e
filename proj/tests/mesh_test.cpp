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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "coefid/errors.hpp"
#include "coefid/mesh.hpp"
#include "support/oracles.hpp"

namespace coefid {
namespace {

bool has_kind(const std::vector<MeshViolation>& v, ViolationKind kind) {
  return std::any_of(v.begin(), v.end(),
                     [&](const MeshViolation& m) { return m.kind == kind; });
}

TEST(PolygonSpec, RejectsDegenerateInput) {
  EXPECT_THROW(PolygonSpec({{0, 0}, {1, 0}}), InvalidInput);
  EXPECT_THROW(PolygonSpec({{0, 0}, {1, 0}, {2, 0}}), InvalidInput);
  // clockwise
  EXPECT_THROW(PolygonSpec({{0, 0}, {0, 1}, {1, 0}}), InvalidInput);
  // nonconvex
  EXPECT_THROW(PolygonSpec({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}),
               InvalidInput);
  // self-intersecting bow tie
  EXPECT_THROW(PolygonSpec({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), InvalidInput);
  EXPECT_THROW(PolygonSpec({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), InvalidInput);
  EXPECT_THROW(PolygonSpec({{0, 0}, {1, NAN}, {0, 1}}), InvalidInput);
}

TEST(PolygonSpec, TrapezoidGeometry) {
  const auto p = PolygonSpec::trapezoid();
  EXPECT_NEAR(p.area(), 1.5 * (1.0 + 0.5) / 2.0, 1e-15);
  EXPECT_NEAR(p.perimeter(), 1.5 + 0.5 + std::hypot(1.5, 0.5) + 1.0, 1e-14);
  EXPECT_TRUE(p.contains(p.centroid()));
  EXPECT_FALSE(p.contains({1.5, 0.9}));
}

TEST(Triangulate, UnitSquareCoarse) {
  const auto mesh = triangulate(PolygonSpec::unit_square(), 1.0);
  EXPECT_TRUE(validate(mesh, PolygonSpec::unit_square()).empty());
  EXPECT_GE(mesh.num_nodes(), 4u);
  EXPECT_LE(mesh.num_nodes(), 5u);
  EXPECT_NEAR(mesh.total_area(), 1.0, 1e-14);
}

TEST(Triangulate, UnitRightTriangleSingleElement) {
  const PolygonSpec tri({{0, 0}, {1, 0}, {0, 1}});
  const auto mesh = triangulate(tri, 2.0);
  ASSERT_EQ(mesh.num_triangles(), 1u);
  EXPECT_EQ(mesh.num_nodes(), 3u);
  EXPECT_NEAR(mesh.total_area(), 0.5, 1e-15);
}

TEST(Triangulate, PaperTrapezoidCounts) {
  const auto mesh = triangulate(PolygonSpec::trapezoid(), 0.034);
  EXPECT_TRUE(validate(mesh, PolygonSpec::trapezoid()).empty());
  EXPECT_NEAR(static_cast<double>(mesh.num_nodes()), 1180.0, 0.15 * 1180.0);
  EXPECT_NEAR(static_cast<double>(mesh.num_triangles()), 2230.0,
              0.15 * 2230.0);
  EXPECT_GE(mesh.min_angle_degrees(), 20.0);
}

TEST(Triangulate, RejectsBadEdgeLength) {
  EXPECT_THROW(triangulate(PolygonSpec::unit_square(), 0.0), InvalidInput);
  EXPECT_THROW(triangulate(PolygonSpec::unit_square(), -1.0), InvalidInput);
  EXPECT_THROW(triangulate(PolygonSpec::unit_square(), NAN), InvalidInput);
}

TEST(Triangulate, DeterministicForFixedSeed) {
  const auto a = triangulate(PolygonSpec::trapezoid(), 0.08);
  const auto b = triangulate(PolygonSpec::trapezoid(), 0.08);
  std::ostringstream sa, sb;
  write_mesh(sa, a);
  write_mesh(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

// Property sweep over random convex polygons and edge lengths.
TEST(Triangulate, RandomPolygonsSatisfyInvariants) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> frac(0.05, 0.3);
  for (int trial = 0; trial < 25; ++trial) {
    const auto poly = testing::random_convex_polygon(gen);
    const double h = frac(gen) * poly.diameter();
    const auto mesh = triangulate(poly, h);
    const auto violations = validate(mesh, poly);
    ASSERT_TRUE(violations.empty())
        << "trial " << trial << ": " << violations.front().detail;
    EXPECT_NEAR(mesh.total_area(), poly.area(), 1e-12 * poly.area());
    EXPECT_GE(mesh.min_angle_degrees(), 20.0) << "trial " << trial;
    const auto euler = static_cast<long>(mesh.num_nodes()) -
                       static_cast<long>(mesh.num_edges()) +
                       static_cast<long>(mesh.num_triangles());
    EXPECT_EQ(euler, 1) << "trial " << trial;
  }
}

TEST(Triangulate, BoundaryEdgesAreOutward) {
  const auto poly = PolygonSpec::trapezoid();
  const auto mesh = triangulate(poly, 0.1);
  const Point c = poly.centroid();
  for (const auto& e : mesh.boundary_edges) {
    EXPECT_GT(signed_area(mesh.nodes[e[0]], mesh.nodes[e[1]], c), 0.0);
  }
}

TEST(Validate, ValidSquareMesh) {
  EXPECT_TRUE(validate(testing::square_mesh(), PolygonSpec::unit_square())
                  .empty());
}

TEST(Validate, ClockwiseTriangle) {
  auto mesh = testing::square_mesh();
  std::swap(mesh.triangles[2][0], mesh.triangles[2][1]);
  const auto v = validate(mesh);
  ASSERT_FALSE(v.empty());
  const auto it = std::find_if(v.begin(), v.end(), [](const MeshViolation& m) {
    return m.kind == ViolationKind::kNonPositiveArea;
  });
  ASSERT_NE(it, v.end());
  EXPECT_EQ(it->index, 2u);
}

TEST(Validate, DanglingBoundaryEdge) {
  auto mesh = testing::square_mesh();
  mesh.triangles.erase(mesh.triangles.begin() + 1);
  const auto v = validate(mesh);
  EXPECT_TRUE(has_kind(v, ViolationKind::kEdgeIncidence));
}

TEST(Validate, IndexOutOfRange) {
  auto mesh = testing::square_mesh();
  mesh.triangles[0][2] = 99;
  const auto v = validate(mesh);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().kind, ViolationKind::kNodeIndexOutOfRange);
  EXPECT_EQ(v.front().index, 0u);
}

TEST(Validate, AreaMismatchAgainstDomain) {
  const auto v = validate(testing::square_mesh(),
                          PolygonSpec({{0, 0}, {2, 0}, {2, 2}, {0, 2}}));
  EXPECT_TRUE(has_kind(v, ViolationKind::kAreaMismatch));
}

TEST(MeshIo, RoundTrip) {
  const auto mesh = triangulate(PolygonSpec::trapezoid(), 0.1);
  std::stringstream s;
  write_mesh(s, mesh);
  const auto back = read_mesh(s);
  ASSERT_EQ(back.num_nodes(), mesh.num_nodes());
  EXPECT_EQ(back.triangles, mesh.triangles);
  EXPECT_EQ(back.boundary_edges, mesh.boundary_edges);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    EXPECT_EQ(back.nodes[i], mesh.nodes[i]);
  }
}

TEST(MeshIo, TextLayout) {
  std::ostringstream s;
  write_mesh(s, testing::unit_triangle_mesh());
  std::istringstream in(s.str());
  std::string word;
  std::size_t count = 0;
  in >> word >> count;
  EXPECT_EQ(word, "nodes");
  EXPECT_EQ(count, 3u);
}

TEST(MeshIo, RejectsMalformed) {
  std::istringstream bad("nodes 2\n0 0\n");
  EXPECT_THROW(read_mesh(bad), InvalidInput);
  std::istringstream wrong_header("vertices 1\n0 0\n");
  EXPECT_THROW(read_mesh(wrong_header), InvalidInput);
}

}  // namespace
}  // namespace coefid
