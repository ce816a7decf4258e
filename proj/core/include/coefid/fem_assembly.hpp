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
#include <functional>
#include <span>
#include <variant>

#include "coefid/mesh.hpp"
#include "coefid/sparse_linalg.hpp"

namespace coefid {

using SpatialFunction = std::function<double(const Point&)>;
using SpaceTimeFunction = std::function<double(const Point&, double)>;

/// Data of the direct problem
///   du/dt - div(k grad u) + p(t) u = f   in the domain,
///   k du/dn + g u = 0                    on the boundary,
///   u(x, 0) = u0(x).
struct ProblemSpec {
  SpatialFunction diffusion;       // k(x) > 0
  SpatialFunction boundary_coeff;  // g(x) >= 0
  SpaceTimeFunction source;        // f(x, t)
  SpatialFunction initial;         // u0(x)

  static ProblemSpec constant(double k, double g, double f, double u0);
  /// k = 1, g = 10, f = 0, u0 = 1.
  static ProblemSpec reference();
};

/// The three bilinear forms over the P1 space, all sharing one pattern:
///   mass      M_ij = int phi_i phi_j
///   stiffness K_ij = int k grad phi_i . grad phi_j
///   boundary  B_ij = int_{boundary} g phi_i phi_j
struct AssembledForms {
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix boundary;

  std::size_t size() const { return mass.rows(); }
};

/// Element matrices of a single P1 triangle, exposed for verification.
using ElementMatrix = std::array<std::array<double, 3>, 3>;
ElementMatrix element_mass(const Point& a, const Point& b, const Point& c);
ElementMatrix element_stiffness(const Point& a, const Point& b, const Point& c,
                                const SpatialFunction& k);

/// Consistent (non-lumped) P1 assembly. Triangle integrals use the
/// three-point mid-edge rule, boundary integrals two-point Gauss.
/// Throws InvalidCoefficient if k <= 0 or g < 0 at a quadrature point.
AssembledForms assemble(const Mesh& mesh, const ProblemSpec& spec);

/// F_i = int f(x, t) phi_i dx.
Vector assemble_load(const Mesh& mesh, const ProblemSpec& spec, double t);
Vector assemble_load(const Mesh& mesh, const SpatialFunction& f);

struct PointEval {
  Point x_star;
};
struct WeightedIntegral {
  SpatialFunction omega;
};
using ObservationKind = std::variant<PointEval, WeightedIntegral>;

/// A linear functional on P1 fields represented by nodal coefficients:
/// functional(U) = weights . U.
class ObservationFunctional {
 public:
  ObservationFunctional(ObservationKind kind, Vector weights)
      : kind_(std::move(kind)), weights_(std::move(weights)) {}

  const ObservationKind& kind() const { return kind_; }
  std::span<const double> weights() const { return weights_; }
  double apply(std::span<const double> field) const;
  bool is_point() const { return std::holds_alternative<PointEval>(kind_); }

 private:
  ObservationKind kind_;
  Vector weights_;
};

/// Point evaluation uses the barycentric weights of the lowest-indexed
/// triangle containing x*. Throws OutOfDomain when x* is outside the mesh or
/// on its boundary.
ObservationFunctional build_observation(const Mesh& mesh,
                                        const ObservationKind& kind);

/// Mean-value functional, omega = 1/|domain|.
ObservationFunctional mean_value_observation(const Mesh& mesh);

}  // namespace coefid
