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

#include "coefid/fem_assembly.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "coefid/errors.hpp"

namespace coefid {

namespace {

Point midpoint(const Point& a, const Point& b) {
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

// Gradients of the three barycentric basis functions (constant on the
// triangle).
std::array<std::array<double, 2>, 3> basis_gradients(const Point& a,
                                                     const Point& b,
                                                     const Point& c) {
  const double twice_area = 2.0 * signed_area(a, b, c);
  return {{{(b.y - c.y) / twice_area, (c.x - b.x) / twice_area},
           {(c.y - a.y) / twice_area, (a.x - c.x) / twice_area},
           {(a.y - b.y) / twice_area, (b.x - a.x) / twice_area}}};
}

// Mid-edge quadrature: node q sits at the midpoint opposite vertex q, so the
// basis values there are 1/2 on the other two vertices and 0 on vertex q.
constexpr double kMidEdgeBasis[3][3] = {
    {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}};

std::array<Point, 3> mid_edge_points(const Point& a, const Point& b,
                                     const Point& c) {
  return {midpoint(b, c), midpoint(a, c), midpoint(a, b)};
}

std::shared_ptr<const SparsityPattern> mesh_pattern(const Mesh& mesh) {
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  entries.reserve(9 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) entries.emplace_back(t[i], t[j]);
    }
  }
  const std::size_t n = mesh.nodes.size();
  return SparsityPattern::from_entries(n, n, std::move(entries));
}

void require_valid(const Mesh& mesh) {
  const auto violations = validate(mesh);
  if (!violations.empty()) {
    throw InvalidInput("mesh is invalid: " + to_string(violations[0].kind) +
                       " at index " + std::to_string(violations[0].index) +
                       " (" + violations[0].detail + ")");
  }
}

}  // namespace

ProblemSpec ProblemSpec::constant(double k, double g, double f, double u0) {
  return {[k](const Point&) { return k; }, [g](const Point&) { return g; },
          [f](const Point&, double) { return f; },
          [u0](const Point&) { return u0; }};
}

ProblemSpec ProblemSpec::reference() { return constant(1.0, 10.0, 0.0, 1.0); }

ElementMatrix element_mass(const Point& a, const Point& b, const Point& c) {
  const double area = signed_area(a, b, c);
  ElementMatrix m{};
  for (int q = 0; q < 3; ++q) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m[i][j] += area / 3.0 * kMidEdgeBasis[q][i] * kMidEdgeBasis[q][j];
      }
    }
  }
  return m;
}

ElementMatrix element_stiffness(const Point& a, const Point& b, const Point& c,
                                const SpatialFunction& k) {
  const double area = signed_area(a, b, c);
  const auto grads = basis_gradients(a, b, c);
  double k_mean = 0.0;
  for (const auto& x : mid_edge_points(a, b, c)) {
    const double kv = k(x);
    if (!(kv > 0.0)) {
      throw InvalidCoefficient("diffusion coefficient " + std::to_string(kv) +
                               " is not positive at (" + std::to_string(x.x) +
                               ", " + std::to_string(x.y) + ")");
    }
    k_mean += kv / 3.0;
  }
  ElementMatrix s{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      s[i][j] = k_mean * area *
                (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
    }
  }
  return s;
}

AssembledForms assemble(const Mesh& mesh, const ProblemSpec& spec) {
  require_valid(mesh);
  const auto pattern = mesh_pattern(mesh);
  SparseMatrix mass(pattern, true), stiffness(pattern, true),
      boundary(pattern, true);

  for (const auto& t : mesh.triangles) {
    const Point& a = mesh.nodes[t[0]];
    const Point& b = mesh.nodes[t[1]];
    const Point& c = mesh.nodes[t[2]];
    const auto me = element_mass(a, b, c);
    const auto ke = element_stiffness(a, b, c, spec.diffusion);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        mass.add(t[i], t[j], me[i][j]);
        stiffness.add(t[i], t[j], ke[i][j]);
      }
    }
  }

  const double gauss = 0.5 / std::sqrt(3.0);
  const double s_points[2] = {0.5 - gauss, 0.5 + gauss};
  for (const auto& e : mesh.boundary_edges) {
    const Point& a = mesh.nodes[e[0]];
    const Point& b = mesh.nodes[e[1]];
    const double half_len = 0.5 * std::hypot(b.x - a.x, b.y - a.y);
    double be[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (double s : s_points) {
      const Point x{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
      const double g = spec.boundary_coeff(x);
      if (!(g >= 0.0)) {
        throw InvalidCoefficient("boundary coefficient " + std::to_string(g) +
                                 " is negative at (" + std::to_string(x.x) +
                                 ", " + std::to_string(x.y) + ")");
      }
      const double phi[2] = {1.0 - s, s};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) be[i][j] += half_len * g * phi[i] * phi[j];
      }
    }
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) boundary.add(e[i], e[j], be[i][j]);
    }
  }
  return {std::move(mass), std::move(stiffness), std::move(boundary)};
}

Vector assemble_load(const Mesh& mesh, const SpatialFunction& f) {
  Vector load(mesh.nodes.size(), 0.0);
  for (const auto& t : mesh.triangles) {
    const Point& a = mesh.nodes[t[0]];
    const Point& b = mesh.nodes[t[1]];
    const Point& c = mesh.nodes[t[2]];
    const double w = signed_area(a, b, c) / 3.0;
    const auto pts = mid_edge_points(a, b, c);
    for (int q = 0; q < 3; ++q) {
      const double fv = f(pts[q]);
      if (fv == 0.0) continue;
      for (int i = 0; i < 3; ++i) load[t[i]] += w * fv * kMidEdgeBasis[q][i];
    }
  }
  return load;
}

Vector assemble_load(const Mesh& mesh, const ProblemSpec& spec, double t) {
  return assemble_load(mesh,
                       [&](const Point& x) { return spec.source(x, t); });
}

double ObservationFunctional::apply(std::span<const double> field) const {
  if (field.size() != weights_.size()) {
    throw DimensionMismatch("observation: field size mismatch");
  }
  return dot(weights_, field);
}

ObservationFunctional build_observation(const Mesh& mesh,
                                        const ObservationKind& kind) {
  const std::size_t n = mesh.nodes.size();
  if (const auto* point = std::get_if<PointEval>(&kind)) {
    const Point& x = point->x_star;
    if (!std::isfinite(x.x) || !std::isfinite(x.y)) {
      throw OutOfDomain("observation point is not finite");
    }
    std::set<std::pair<NodeIndex, NodeIndex>> boundary;
    for (const auto& e : mesh.boundary_edges) {
      boundary.emplace(std::min(e[0], e[1]), std::max(e[0], e[1]));
    }
    for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
      const Triangle& t = mesh.triangles[ti];
      const Point& a = mesh.nodes[t[0]];
      const Point& b = mesh.nodes[t[1]];
      const Point& c = mesh.nodes[t[2]];
      const double area = signed_area(a, b, c);
      std::array<double, 3> lambda = {signed_area(x, b, c) / area,
                                      signed_area(a, x, c) / area,
                                      signed_area(a, b, x) / area};
      constexpr double tol = 1e-12;
      if (*std::min_element(lambda.begin(), lambda.end()) < -tol) continue;

      // A vanishing coordinate puts x on the edge opposite that vertex.
      for (int v = 0; v < 3; ++v) {
        if (std::abs(lambda[v]) > tol) continue;
        const NodeIndex p = t[(v + 1) % 3], q = t[(v + 2) % 3];
        if (boundary.contains({std::min(p, q), std::max(p, q)})) {
          throw OutOfDomain("observation point lies on the domain boundary");
        }
      }
      double sum = 0.0;
      for (auto& l : lambda) {
        l = std::max(l, 0.0);
        sum += l;
      }
      Vector w(n, 0.0);
      for (int v = 0; v < 3; ++v) w[t[v]] += lambda[v] / sum;
      return ObservationFunctional(kind, std::move(w));
    }
    throw OutOfDomain("observation point (" + std::to_string(x.x) + ", " +
                      std::to_string(x.y) + ") is outside the mesh");
  }

  const auto& omega = std::get<WeightedIntegral>(kind).omega;
  return ObservationFunctional(kind, assemble_load(mesh, omega));
}

ObservationFunctional mean_value_observation(const Mesh& mesh) {
  const double inv_area = 1.0 / mesh.total_area();
  return build_observation(
      mesh, WeightedIntegral{[inv_area](const Point&) { return inv_area; }});
}

}  // namespace coefid
