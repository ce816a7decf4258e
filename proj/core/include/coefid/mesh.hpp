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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace coefid {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using NodeIndex = std::uint32_t;
using Triangle = std::array<NodeIndex, 3>;
using Edge = std::array<NodeIndex, 2>;

/// Signed area of (a, b, c); positive when counterclockwise.
double signed_area(const Point& a, const Point& b, const Point& c);

/// Convex polygon given by its vertices in counterclockwise order.
class PolygonSpec {
 public:
  /// Throws InvalidInput unless the vertices form a simple convex polygon,
  /// ordered counterclockwise, with no repeated or collinear vertices.
  explicit PolygonSpec(std::vector<Point> vertices);

  const std::vector<Point>& vertices() const { return vertices_; }
  double area() const;
  double perimeter() const;
  double diameter() const;
  Point centroid() const;
  /// True when p lies inside or on the boundary, up to `tol` (absolute).
  bool contains(const Point& p, double tol = 0.0) const;

  /// The trapezoid used by all presets: (0,0), (1.5,0), (1.5,0.5), (0,1).
  static PolygonSpec trapezoid();
  static PolygonSpec unit_square();

 private:
  std::vector<Point> vertices_;
};

/// Conforming P1 triangulation. Triangles are counterclockwise; boundary
/// edges are oriented so that the domain lies to their left, which makes the
/// right-hand normal the outward one.
struct Mesh {
  std::vector<Point> nodes;
  std::vector<Triangle> triangles;
  std::vector<Edge> boundary_edges;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  double triangle_area(std::size_t t) const;
  double total_area() const;
  /// Number of distinct undirected edges.
  std::size_t num_edges() const;
  double min_angle_degrees() const;
};

enum class ViolationKind {
  kNodeIndexOutOfRange,
  kNonPositiveArea,
  kEdgeIncidence,
  kBoundaryEdgeMismatch,
  kAreaMismatch,
};

struct MeshViolation {
  ViolationKind kind;
  /// Offending triangle or boundary-edge index; for edge-incidence problems
  /// on derived edges it is the index of one adjacent triangle (or the
  /// boundary-edge entry when no triangle is adjacent).
  std::size_t index = 0;
  std::string detail;
};

std::string to_string(ViolationKind kind);

/// Returns every invariant violation found; empty means the mesh is valid.
/// When `domain` is given the total area is also checked against it.
std::vector<MeshViolation> validate(
    const Mesh& mesh, const std::optional<PolygonSpec>& domain = std::nullopt);

struct TriangulateOptions {
  /// Smallest acceptable interior angle of the output.
  double min_angle_degrees = 20.0;
  /// Seed of the jitter that breaks cocircular lattice configurations.
  std::uint64_t seed = 1;
  std::size_t max_refinement_insertions = 200000;
};

/// Delaunay triangulation of a convex polygon with Ruppert-style refinement.
/// Boundary sampling uses ceil(L / h) equal subdivisions per polygon edge and
/// the interior is seeded with a jittered equilateral lattice of spacing h.
/// Throws InvalidInput for a nonpositive edge length and MeshingFailure when
/// refinement cannot reach the angle bound.
Mesh triangulate(const PolygonSpec& polygon, double target_edge_length,
                 const TriangulateOptions& options = {});

/// Plain-text mesh format:
///   nodes N / N lines "x y" / triangles M / M lines "i j k" /
///   boundary_edges B / B lines "i j"   (0-based indices)
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

}  // namespace coefid
