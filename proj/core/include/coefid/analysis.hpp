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
#include <span>
#include <vector>

#include "coefid/direct_solver.hpp"

namespace coefid {

/// Time window [lo, hi] given as fractions of the final time.
using Window = std::array<double, 2>;

/// max |p[n] - exact(t^n)| over n >= 1 with t^n in any of the windows.
double max_error(std::span<const double> p, const TimeGrid& grid,
                 const CoefficientFunction& exact,
                 std::span<const Window> windows);

/// max |a[n] - b[m]| over the coarse grid's points (n >= 1) that coincide
/// with points of the fine grid. N_fine must be a multiple of N_coarse.
double max_difference_on_common_times(std::span<const double> coarse,
                                      std::span<const double> fine);

/// Sign flips of p[n] - exact(t^n) for t^n in `window`; exact zeros are
/// skipped.
std::size_t count_sign_changes(std::span<const double> p, const TimeGrid& grid,
                               const CoefficientFunction& exact,
                               const Window& window);

/// log(e_coarse / e_fine) / log(refinement). Returns 0 when either error is
/// zero, so the result is always finite.
double observed_order(double e_coarse, double e_fine, double refinement = 2.0);

}  // namespace coefid
