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

#include "coefid/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "coefid/errors.hpp"

namespace coefid {

namespace {

bool in_window(double t, const TimeGrid& grid, const Window& w) {
  const double slack = 1e-9 * grid.final_time();
  return t >= w[0] * grid.final_time() - slack &&
         t <= w[1] * grid.final_time() + slack;
}

}  // namespace

double max_error(std::span<const double> p, const TimeGrid& grid,
                 const CoefficientFunction& exact,
                 std::span<const Window> windows) {
  double m = 0.0;
  for (std::size_t n = 1; n < p.size(); ++n) {
    const double t = grid.t(n);
    const bool inside = std::any_of(windows.begin(), windows.end(),
                                    [&](const Window& w) {
                                      return in_window(t, grid, w);
                                    });
    if (inside) m = std::max(m, std::abs(p[n] - exact(t)));
  }
  return m;
}

double max_difference_on_common_times(std::span<const double> coarse,
                                      std::span<const double> fine) {
  if (coarse.size() < 2 || fine.size() < 2 ||
      (fine.size() - 1) % (coarse.size() - 1) != 0) {
    throw InvalidInput("grids are not nested");
  }
  const std::size_t stride = (fine.size() - 1) / (coarse.size() - 1);
  double m = 0.0;
  for (std::size_t n = 1; n < coarse.size(); ++n) {
    m = std::max(m, std::abs(coarse[n] - fine[n * stride]));
  }
  return m;
}

std::size_t count_sign_changes(std::span<const double> p, const TimeGrid& grid,
                               const CoefficientFunction& exact,
                               const Window& window) {
  std::size_t changes = 0;
  double previous = 0.0;
  for (std::size_t n = 1; n < p.size(); ++n) {
    const double t = grid.t(n);
    if (!in_window(t, grid, window)) continue;
    const double e = p[n] - exact(t);
    if (e == 0.0) continue;
    if (previous != 0.0 && (e > 0.0) != (previous > 0.0)) ++changes;
    previous = e;
  }
  return changes;
}

double observed_order(double e_coarse, double e_fine, double refinement) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return 0.0;
  return std::log(e_coarse / e_fine) / std::log(refinement);
}

}  // namespace coefid
