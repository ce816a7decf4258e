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

#include "coefid/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "coefid/errors.hpp"

namespace coefid {

namespace {

double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::uint64_t edge_key(NodeIndex a, NodeIndex b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

double min_angle_of(const Point& a, const Point& b, const Point& c) {
  const double la = distance(b, c);
  const double lb = distance(a, c);
  const double lc = distance(a, b);
  auto angle = [](double opp, double s1, double s2) {
    const double cosv = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
    return std::acos(std::clamp(cosv, -1.0, 1.0));
  };
  const double m = std::min({angle(la, lb, lc), angle(lb, la, lc),
                             angle(lc, la, lb)});
  return m * 180.0 / std::numbers::pi;
}

Point circumcenter(const Point& a, const Point& b, const Point& c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
}

// Incremental Bowyer-Watson triangulation inside a large enclosing triangle.
// Vertices 0..2 are the enclosing ("super") vertices.
class DelaunayBuilder {
 public:
  struct Tri {
    Triangle v;
    Point center;
    double radius2;
    bool alive;
  };

  explicit DelaunayBuilder(const PolygonSpec& polygon) {
    double xmin = std::numeric_limits<double>::max(), ymin = xmin;
    double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
    for (const auto& v : polygon.vertices()) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    const double span = std::max(xmax - xmin, ymax - ymin);
    const Point mid{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
    const double big = 1.0e3 * span;
    points_.push_back({mid.x - big, mid.y - big});
    points_.push_back({mid.x + big, mid.y - big});
    points_.push_back({mid.x, mid.y + big});
    add_triangle({0, 1, 2});
  }

  static constexpr NodeIndex kFirstReal = 3;

  const std::vector<Point>& points() const { return points_; }
  const std::vector<Tri>& triangles() const { return tris_; }

  NodeIndex insert(const Point& p) {
    const auto id = static_cast<NodeIndex>(points_.size());
    points_.push_back(p);

    cavity_.clear();
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      const Tri& tri = tris_[t];
      if (!tri.alive) continue;
      const double dx = p.x - tri.center.x;
      const double dy = p.y - tri.center.y;
      if (dx * dx + dy * dy < tri.radius2 * (1.0 - 1e-12)) cavity_.push_back(t);
    }
    if (cavity_.empty()) {
      throw MeshingFailure("Delaunay insertion found an empty cavity at (" +
                           std::to_string(p.x) + ", " + std::to_string(p.y) +
                           ")");
    }

    std::map<std::uint64_t, std::pair<Edge, int>> edges;
    for (auto t : cavity_) {
      const Triangle& v = tris_[t].v;
      for (int e = 0; e < 3; ++e) {
        const Edge ed{v[e], v[(e + 1) % 3]};
        auto [it, inserted] =
            edges.try_emplace(edge_key(ed[0], ed[1]), ed, 0);
        ++it->second.second;
      }
      tris_[t].alive = false;
      ++dead_;
    }
    for (const auto& [key, entry] : edges) {
      if (entry.second != 1) continue;
      const Edge& ed = entry.first;
      if (cross(points_[ed[0]], points_[ed[1]], p) <= 0.0) {
        throw MeshingFailure(
            "Delaunay cavity is not star-shaped (near-degenerate input)");
      }
      add_triangle({ed[0], ed[1], id});
    }
    if (dead_ > tris_.size() / 2) compact();
    return id;
  }

 private:
  void add_triangle(const Triangle& v) {
    const Point c = circumcenter(points_[v[0]], points_[v[1]], points_[v[2]]);
    const double dx = points_[v[0]].x - c.x;
    const double dy = points_[v[0]].y - c.y;
    tris_.push_back({v, c, dx * dx + dy * dy, true});
  }

  void compact() {
    std::erase_if(tris_, [](const Tri& t) { return !t.alive; });
    dead_ = 0;
  }

  std::vector<Point> points_;
  std::vector<Tri> tris_;
  std::vector<std::size_t> cavity_;
  std::size_t dead_ = 0;
};

bool encroaches(const Point& q, const Point& a, const Point& b) {
  const double dot = (q.x - a.x) * (q.x - b.x) + (q.y - a.y) * (q.y - b.y);
  const double len2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  return dot < -1e-10 * len2;
}

}  // namespace

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * cross(a, b, c);
}

PolygonSpec::PolygonSpec(std::vector<Point> vertices)
    : vertices_(std::move(vertices)) {
  const std::size_t n = vertices_.size();
  if (n < 3) throw InvalidInput("polygon needs at least 3 vertices");
  for (const auto& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw InvalidInput("polygon vertex is not finite");
    }
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    scale = std::max(scale, distance(vertices_[i], vertices_[(i + 1) % n]));
  }
  if (scale == 0.0) throw InvalidInput("polygon is degenerate");
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[(i + 1) % n];
    const Point& c = vertices_[(i + 2) % n];
    if (distance(a, b) <= 1e-12 * scale) {
      throw InvalidInput("polygon has repeated vertex " + std::to_string(i));
    }
    const double turn = cross(a, b, c);
    if (turn <= 1e-12 * scale * scale) {
      throw InvalidInput(
          "polygon must be convex, counterclockwise, and without collinear "
          "vertices (violated at vertex " +
          std::to_string((i + 1) % n) + ")");
    }
  }
  // Convex turning at every vertex still admits a star that winds twice.
  double angle_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[(i + 1) % n];
    const Point& c = vertices_[(i + 2) % n];
    const double ux = b.x - a.x, uy = b.y - a.y;
    const double vx = c.x - b.x, vy = c.y - b.y;
    angle_sum += std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
  }
  if (std::abs(angle_sum - 2.0 * std::numbers::pi) > 1e-6) {
    throw InvalidInput("polygon is self-intersecting");
  }
}

double PolygonSpec::area() const {
  double a = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = vertices_[i];
    const Point& q = vertices_[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

double PolygonSpec::perimeter() const {
  double s = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    s += distance(vertices_[i], vertices_[(i + 1) % n]);
  }
  return s;
}

double PolygonSpec::diameter() const {
  double d = 0.0;
  for (const auto& a : vertices_) {
    for (const auto& b : vertices_) d = std::max(d, distance(a, b));
  }
  return d;
}

Point PolygonSpec::centroid() const {
  double cx = 0.0, cy = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = vertices_[i];
    const Point& q = vertices_[(i + 1) % n];
    const double w = p.x * q.y - q.x * p.y;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  const double a6 = 6.0 * area();
  return {cx / a6, cy / a6};
}

bool PolygonSpec::contains(const Point& p, double tol) const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[(i + 1) % n];
    // signed distance of p to the left of edge a->b
    if (cross(a, b, p) / distance(a, b) < -tol) return false;
  }
  return true;
}

PolygonSpec PolygonSpec::trapezoid() {
  return PolygonSpec({{0.0, 0.0}, {1.5, 0.0}, {1.5, 0.5}, {0.0, 1.0}});
}

PolygonSpec PolygonSpec::unit_square() {
  return PolygonSpec({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}});
}

double Mesh::triangle_area(std::size_t t) const {
  const Triangle& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

std::size_t Mesh::num_edges() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(3 * triangles.size());
  for (const auto& t : triangles) {
    for (int e = 0; e < 3; ++e) keys.push_back(edge_key(t[e], t[(e + 1) % 3]));
  }
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(
      std::unique(keys.begin(), keys.end()) - keys.begin());
}

double Mesh::min_angle_degrees() const {
  double m = 180.0;
  for (const auto& t : triangles) {
    m = std::min(m, min_angle_of(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
  }
  return m;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kNodeIndexOutOfRange:
      return "node-index-out-of-range";
    case ViolationKind::kNonPositiveArea:
      return "non-positive-area";
    case ViolationKind::kEdgeIncidence:
      return "edge-incidence";
    case ViolationKind::kBoundaryEdgeMismatch:
      return "boundary-edge-mismatch";
    case ViolationKind::kAreaMismatch:
      return "area-mismatch";
  }
  return "unknown";
}

std::vector<MeshViolation> validate(const Mesh& mesh,
                                    const std::optional<PolygonSpec>& domain) {
  std::vector<MeshViolation> out;
  const std::size_t n = mesh.nodes.size();

  bool indices_ok = true;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (NodeIndex v : mesh.triangles[t]) {
      if (v >= n) {
        out.push_back({ViolationKind::kNodeIndexOutOfRange, t,
                       "triangle references node " + std::to_string(v)});
        indices_ok = false;
      }
    }
  }
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    for (NodeIndex v : mesh.boundary_edges[e]) {
      if (v >= n) {
        out.push_back({ViolationKind::kNodeIndexOutOfRange, e,
                       "boundary edge references node " + std::to_string(v)});
        indices_ok = false;
      }
    }
  }
  if (!indices_ok) return out;

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double a = mesh.triangle_area(t);
    if (!(a > 0.0)) {
      out.push_back({ViolationKind::kNonPositiveArea, t,
                     "signed area " + std::to_string(a)});
    }
  }

  struct Incidence {
    int count = 0;
    std::size_t triangle = 0;
    Edge directed{};
    bool same_direction_twice = false;
  };
  std::map<std::uint64_t, Incidence> edges;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const Edge d{tri[e], tri[(e + 1) % 3]};
      auto& inc = edges[edge_key(d[0], d[1])];
      if (inc.count == 1 && inc.directed == d) inc.same_direction_twice = true;
      if (inc.count == 0) {
        inc.triangle = t;
        inc.directed = d;
      }
      ++inc.count;
    }
  }

  std::map<std::uint64_t, std::size_t> boundary;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const Edge& d = mesh.boundary_edges[e];
    const auto key = edge_key(d[0], d[1]);
    if (!boundary.emplace(key, e).second) {
      out.push_back({ViolationKind::kBoundaryEdgeMismatch, e,
                     "duplicate boundary edge"});
      continue;
    }
    auto it = edges.find(key);
    if (it == edges.end()) {
      out.push_back({ViolationKind::kEdgeIncidence, e,
                     "boundary edge belongs to no triangle"});
    } else if (it->second.count != 1) {
      out.push_back({ViolationKind::kEdgeIncidence, e,
                     "boundary edge shared by " +
                         std::to_string(it->second.count) + " triangles"});
    } else if (it->second.directed != d) {
      out.push_back({ViolationKind::kBoundaryEdgeMismatch, e,
                     "boundary edge is not outward oriented"});
    }
  }
  for (const auto& [key, inc] : edges) {
    if (inc.count > 2 || inc.same_direction_twice) {
      out.push_back({ViolationKind::kEdgeIncidence, inc.triangle,
                     "edge (" + std::to_string(inc.directed[0]) + ", " +
                         std::to_string(inc.directed[1]) +
                         ") is not shared consistently"});
    } else if (inc.count == 1 && !boundary.contains(key)) {
      out.push_back({ViolationKind::kEdgeIncidence, inc.triangle,
                     "edge (" + std::to_string(inc.directed[0]) + ", " +
                         std::to_string(inc.directed[1]) +
                         ") has one triangle but is not a boundary edge"});
    }
  }

  if (domain) {
    const double expected = domain->area();
    const double got = mesh.total_area();
    if (std::abs(got - expected) > 1e-12 * std::abs(expected)) {
      out.push_back({ViolationKind::kAreaMismatch, 0,
                     "mesh area " + std::to_string(got) + " vs domain area " +
                         std::to_string(expected)});
    }
  }
  return out;
}

Mesh triangulate(const PolygonSpec& polygon, double target_edge_length,
                 const TriangulateOptions& options) {
  const double h = target_edge_length;
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidInput("target edge length must be positive and finite");
  }
  const auto& verts = polygon.vertices();
  const std::size_t nv = verts.size();

  DelaunayBuilder dt(polygon);

  // Polygon corners first, then equal subdivisions of each polygon edge.
  std::vector<NodeIndex> corner(nv);
  for (std::size_t i = 0; i < nv; ++i) corner[i] = dt.insert(verts[i]);
  std::vector<Edge> segments;
  for (std::size_t i = 0; i < nv; ++i) {
    const Point& a = verts[i];
    const Point& b = verts[(i + 1) % nv];
    const auto pieces =
        std::max<std::size_t>(1, static_cast<std::size_t>(
                                     std::ceil(distance(a, b) / h - 1e-9)));
    NodeIndex prev = corner[i];
    for (std::size_t k = 1; k < pieces; ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(pieces);
      const NodeIndex id =
          dt.insert({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
      segments.push_back({prev, id});
      prev = id;
    }
    segments.push_back({prev, corner[(i + 1) % nv]});
  }

  // Interior: equilateral lattice kept clear of the boundary.
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-0.02 * h, 0.02 * h);
  double xmin = verts[0].x, xmax = xmin, ymin = verts[0].y, ymax = ymin;
  for (const auto& v : verts) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  const double row_step = h * std::sqrt(3.0) / 2.0;
  const double clearance = 0.6 * h;
  for (std::size_t row = 1;; ++row) {
    const double y = ymin + static_cast<double>(row) * row_step;
    if (y > ymax) break;
    const double shift = (row % 2 == 1) ? 0.5 * h : 0.0;
    for (double x = xmin + shift; x <= xmax; x += h) {
      const Point p{x + jitter(rng), y + jitter(rng)};
      if (polygon.contains(p, -clearance)) dt.insert(p);
    }
  }

  // Ruppert-style refinement: split encroached boundary segments, then
  // insert circumcenters of triangles below the angle bound.
  std::size_t insertions = 0;
  auto budget_check = [&] {
    if (++insertions > options.max_refinement_insertions) {
      throw MeshingFailure(
          "mesh refinement exceeded " +
          std::to_string(options.max_refinement_insertions) +
          " insertions before reaching min angle " +
          std::to_string(options.min_angle_degrees) + " degrees");
    }
  };
  auto split_segment = [&](std::size_t s) {
    const auto [a, b] = segments[s];
    const Point& pa = dt.points()[a];
    const Point& pb = dt.points()[b];
    const NodeIndex m = dt.insert({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
    segments[s] = {a, m};
    segments.push_back({m, b});
    budget_check();
  };
  auto is_real = [](const Triangle& v) {
    return v[0] >= DelaunayBuilder::kFirstReal &&
           v[1] >= DelaunayBuilder::kFirstReal &&
           v[2] >= DelaunayBuilder::kFirstReal;
  };

  for (;;) {
    // Apex of the triangle on each boundary segment.
    std::map<std::uint64_t, NodeIndex> apex;
    for (const auto& tri : dt.triangles()) {
      if (!tri.alive || !is_real(tri.v)) continue;
      for (int e = 0; e < 3; ++e) {
        apex[edge_key(tri.v[e], tri.v[(e + 1) % 3])] = tri.v[(e + 2) % 3];
      }
    }
    bool split_any = false;
    const std::size_t nseg = segments.size();
    for (std::size_t s = 0; s < nseg; ++s) {
      auto it = apex.find(edge_key(segments[s][0], segments[s][1]));
      if (it == apex.end()) {
        throw MeshingFailure("boundary segment missing from triangulation");
      }
      const auto& pts = dt.points();
      if (encroaches(pts[it->second], pts[segments[s][0]],
                     pts[segments[s][1]])) {
        split_segment(s);
        split_any = true;
      }
    }
    if (split_any) continue;

    const auto& pts = dt.points();
    double worst = options.min_angle_degrees;
    std::optional<Triangle> bad;
    for (const auto& tri : dt.triangles()) {
      if (!tri.alive || !is_real(tri.v)) continue;
      const double a = min_angle_of(pts[tri.v[0]], pts[tri.v[1]],
                                    pts[tri.v[2]]);
      if (a < worst) {
        worst = a;
        bad = tri.v;
      }
    }
    if (!bad) break;

    const Point c = circumcenter(pts[(*bad)[0]], pts[(*bad)[1]],
                                 pts[(*bad)[2]]);
    std::vector<std::size_t> hit;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      if (encroaches(c, pts[segments[s][0]], pts[segments[s][1]])) {
        hit.push_back(s);
      }
    }
    if (hit.empty() && !polygon.contains(c, 1e-12 * polygon.diameter())) {
      throw MeshingFailure("circumcenter left the domain without encroaching");
    }
    if (hit.empty()) {
      dt.insert(c);
      budget_check();
    } else {
      for (auto s : hit) split_segment(s);
    }
  }

  // Extract the real triangles and renumber nodes.
  Mesh mesh;
  const auto& pts = dt.points();
  mesh.nodes.assign(pts.begin() + DelaunayBuilder::kFirstReal, pts.end());
  constexpr NodeIndex off = DelaunayBuilder::kFirstReal;
  for (const auto& tri : dt.triangles()) {
    if (!tri.alive || !is_real(tri.v)) continue;
    mesh.triangles.push_back(
        {tri.v[0] - off, tri.v[1] - off, tri.v[2] - off});
  }
  std::map<std::uint64_t, std::pair<Edge, int>> count;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const Edge d{t[e], t[(e + 1) % 3]};
      auto [it, ins] = count.try_emplace(edge_key(d[0], d[1]), d, 0);
      ++it->second.second;
    }
  }
  for (const auto& [key, entry] : count) {
    if (entry.second == 1) mesh.boundary_edges.push_back(entry.first);
  }

  const double area = polygon.area();
  if (std::abs(mesh.total_area() - area) > 1e-12 * area) {
    throw MeshingFailure("triangulation does not cover the polygon (area " +
                         std::to_string(mesh.total_area()) + " vs " +
                         std::to_string(area) + ")");
  }
  if (mesh.min_angle_degrees() < options.min_angle_degrees) {
    throw MeshingFailure("minimum angle " +
                         std::to_string(mesh.min_angle_degrees()) +
                         " below bound");
  }
  return mesh;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto old_precision = out.precision(17);
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const auto& p : mesh.nodes) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) {
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  out << "boundary_edges " << mesh.boundary_edges.size() << '\n';
  for (const auto& e : mesh.boundary_edges) out << e[0] << ' ' << e[1] << '\n';
  out.precision(old_precision);
}

Mesh read_mesh(std::istream& in) {
  auto header = [&](const std::string& expected) {
    std::string word;
    std::size_t count = 0;
    if (!(in >> word >> count) || word != expected) {
      throw InvalidInput("mesh file: expected '" + expected + " <count>'");
    }
    return count;
  };
  Mesh mesh;
  mesh.nodes.resize(header("nodes"));
  for (auto& p : mesh.nodes) {
    if (!(in >> p.x >> p.y)) throw InvalidInput("mesh file: bad node line");
  }
  mesh.triangles.resize(header("triangles"));
  for (auto& t : mesh.triangles) {
    if (!(in >> t[0] >> t[1] >> t[2])) {
      throw InvalidInput("mesh file: bad triangle line");
    }
  }
  mesh.boundary_edges.resize(header("boundary_edges"));
  for (auto& e : mesh.boundary_edges) {
    if (!(in >> e[0] >> e[1])) {
      throw InvalidInput("mesh file: bad boundary edge line");
    }
  }
  return mesh;
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_mesh(out, mesh);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_mesh(in);
}

}  // namespace coefid
