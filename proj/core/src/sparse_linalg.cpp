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

#include "coefid/sparse_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "coefid/errors.hpp"

namespace coefid {

SparsityPattern::SparsityPattern(std::size_t rows, std::size_t cols,
                                 std::vector<std::size_t> row_offsets,
                                 std::vector<std::size_t> col_indices)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)) {
  if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != col_indices_.size()) {
    throw DimensionMismatch("sparsity pattern: inconsistent row offsets");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (col_indices_[k] >= cols_) {
        throw DimensionMismatch("sparsity pattern: column out of range");
      }
      if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1]) {
        throw ContractViolation(
            "sparsity pattern: columns not strictly increasing in row " +
            std::to_string(r));
      }
    }
  }
}

std::shared_ptr<const SparsityPattern> SparsityPattern::from_entries(
    std::size_t rows, std::size_t cols,
    std::vector<std::pair<std::size_t, std::size_t>> entries) {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> cols_idx;
  cols_idx.reserve(entries.size());
  for (const auto& [r, c] : entries) {
    if (r >= rows) throw DimensionMismatch("pattern entry row out of range");
    ++offsets[r + 1];
    cols_idx.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return std::make_shared<const SparsityPattern>(rows, cols, std::move(offsets),
                                                 std::move(cols_idx));
}

std::size_t SparsityPattern::find(std::size_t row, std::size_t col) const {
  if (row >= rows_) return npos;
  const auto first = col_indices_.begin() + row_offsets_[row];
  const auto last = col_indices_.begin() + row_offsets_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return npos;
  return static_cast<std::size_t>(it - col_indices_.begin());
}

SparseMatrix::SparseMatrix(std::shared_ptr<const SparsityPattern> pattern,
                           bool symmetric)
    : pattern_(std::move(pattern)),
      values_(pattern_->nnz(), 0.0),
      symmetric_(symmetric) {}

SparseMatrix::SparseMatrix(std::shared_ptr<const SparsityPattern> pattern,
                           Vector values, bool symmetric)
    : pattern_(std::move(pattern)),
      values_(std::move(values)),
      symmetric_(symmetric) {
  if (values_.size() != pattern_->nnz()) {
    throw DimensionMismatch("sparse matrix: value count != pattern nnz");
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  return diagonal(Vector(n, 1.0));
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  const std::size_t n = diag.size();
  std::vector<std::size_t> offsets(n + 1), cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = i;
  }
  auto pattern = std::make_shared<const SparsityPattern>(
      n, n, std::move(offsets), std::move(cols));
  return SparseMatrix(std::move(pattern), Vector(diag.begin(), diag.end()),
                      true);
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
  const auto k = pattern_->find(row, col);
  return k == SparsityPattern::npos ? 0.0 : values_[k];
}

void SparseMatrix::add(std::size_t row, std::size_t col, double v) {
  const auto k = pattern_->find(row, col);
  if (k == SparsityPattern::npos) {
    throw ContractViolation("sparse add outside pattern at (" +
                            std::to_string(row) + ", " + std::to_string(col) +
                            ")");
  }
  values_[k] += v;
}

void SparseMatrix::multiply(std::span<const double> x,
                            std::span<double> y) const {
  if (x.size() != cols() || y.size() != rows()) {
    throw DimensionMismatch("sparse multiply: dimension mismatch");
  }
  const auto offsets = pattern_->row_offsets();
  const auto cols_idx = pattern_->col_indices();
  for (std::size_t r = 0; r < rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      s += values_[k] * x[cols_idx[k]];
    }
    y[r] = s;
  }
}

Vector SparseMatrix::operator*(std::span<const double> x) const {
  Vector y(rows());
  multiply(x, y);
  return y;
}

Vector SparseMatrix::diagonal_values() const {
  Vector d(std::min(rows(), cols()), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

Vector SparseMatrix::row_sums() const {
  Vector s(rows(), 0.0);
  const auto offsets = pattern_->row_offsets();
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) s[r] += values_[k];
  }
  return s;
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
  if (rows() != cols()) return false;
  double scale = 0.0;
  for (double v : values_) scale = std::max(scale, std::abs(v));
  const auto offsets = pattern_->row_offsets();
  const auto cols_idx = pattern_->col_indices();
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const std::size_t c = cols_idx[k];
      if (c <= r) continue;
      if (std::abs(values_[k] - at(c, r)) > rel_tol * scale) return false;
    }
  }
  return true;
}

void SparseMatrix::write_coordinates(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  const auto offsets = pattern_->row_offsets();
  const auto cols_idx = pattern_->col_indices();
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      out << r << ' ' << cols_idx[k] << ' ' << values_[k] << '\n';
    }
  }
  out.precision(old_precision);
}

SparseMatrix axpy_combine(std::span<const double> coeffs,
                          std::span<const SparseMatrix* const> mats) {
  if (coeffs.size() != mats.size() || mats.empty()) {
    throw DimensionMismatch("axpy_combine: need one coefficient per matrix");
  }
  const std::size_t rows = mats[0]->rows();
  const std::size_t cols = mats[0]->cols();
  bool shared = true;
  bool symmetric = true;
  for (const auto* m : mats) {
    if (m->rows() != rows || m->cols() != cols) {
      throw DimensionMismatch("axpy_combine: dimension mismatch");
    }
    shared = shared && m->shared_pattern() == mats[0]->shared_pattern();
    symmetric = symmetric && m->flagged_symmetric();
  }

  if (shared) {
    Vector values(mats[0]->nnz(), 0.0);
    for (std::size_t k = 0; k < mats.size(); ++k) {
      const auto v = mats[k]->values();
      const double c = coeffs[k];
      if (c == 0.0) continue;
      for (std::size_t i = 0; i < values.size(); ++i) values[i] += c * v[i];
    }
    return SparseMatrix(mats[0]->shared_pattern(), std::move(values),
                        symmetric);
  }

  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (const auto* m : mats) {
    const auto offsets = m->pattern().row_offsets();
    const auto cols_idx = m->pattern().col_indices();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        entries.emplace_back(r, cols_idx[k]);
      }
    }
  }
  SparseMatrix out(SparsityPattern::from_entries(rows, cols, std::move(entries)),
                   symmetric);
  for (std::size_t m = 0; m < mats.size(); ++m) {
    const auto offsets = mats[m]->pattern().row_offsets();
    const auto cols_idx = mats[m]->pattern().col_indices();
    const auto v = mats[m]->values();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        out.add(r, cols_idx[k], coeffs[m] * v[k]);
      }
    }
  }
  return out;
}

SparseMatrix axpy_combine(
    std::initializer_list<std::pair<double, const SparseMatrix*>> terms) {
  std::vector<double> coeffs;
  std::vector<const SparseMatrix*> mats;
  for (const auto& [c, m] : terms) {
    coeffs.push_back(c);
    mats.push_back(m);
  }
  return axpy_combine(coeffs, mats);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Vector solve_spd(const SparseMatrix& a, std::span<const double> b,
                 double rel_tol) {
  return solve_spd(a, b, SolverOptions{rel_tol, 0});
}

Vector solve_spd(const SparseMatrix& a, std::span<const double> b,
                 const SolverOptions& options,
                 std::span<const double> initial_guess, SolveStats* stats) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) {
    throw DimensionMismatch("solve_spd: dimension mismatch");
  }
  if (!(options.rel_tol > 0.0 && options.rel_tol < 1.0)) {
    throw InvalidInput("solve_spd: rel_tol must lie in (0, 1)");
  }
  if (!a.is_symmetric(1e-13)) {
    throw ContractViolation(
        a.flagged_symmetric()
            ? "solve_spd: matrix flagged symmetric is not symmetric"
            : "solve_spd: matrix is not symmetric");
  }

  Vector x(n, 0.0);
  if (!initial_guess.empty()) {
    if (initial_guess.size() != n) {
      throw DimensionMismatch("solve_spd: initial guess size mismatch");
    }
    std::copy(initial_guess.begin(), initial_guess.end(), x.begin());
  }
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return Vector(n, 0.0);
  }

  Vector inv_diag = a.diagonal_values();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      throw IndefiniteSystem("solve_spd: nonpositive diagonal entry at row " +
                             std::to_string(i));
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  Vector r(n), z(n), p(n), ap(n);
  a.multiply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  double rnorm = norm2(r);
  const double target = options.rel_tol * bnorm;
  const std::size_t cap =
      options.max_iterations == 0 ? 10 * n : options.max_iterations;

  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  std::size_t it = 0;
  while (rnorm > target) {
    if (it == cap) {
      throw NoConvergence("solve_spd: no convergence after " +
                              std::to_string(it) + " iterations, residual " +
                              std::to_string(rnorm / bnorm),
                          rnorm / bnorm, it);
    }
    a.multiply(p, ap);
    const double curvature = dot(p, ap);
    if (!(curvature > 0.0)) {
      throw IndefiniteSystem(
          "solve_spd: nonpositive curvature, matrix is not positive definite");
    }
    const double alpha = rz / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++it;
    // Recompute the true residual periodically to avoid drift.
    if (it % 50 == 0) {
      a.multiply(x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    }
    rnorm = norm2(r);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  // Confirm the bound on the true residual.
  a.multiply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  double true_res = norm2(r);
  while (true_res > target) {
    // Recurrence drifted from the true residual; restart from x.
    if (it >= cap) {
      throw NoConvergence("solve_spd: residual bound not met, residual " +
                              std::to_string(true_res / bnorm),
                          true_res / bnorm, it);
    }
    const SolverOptions inner{std::min(0.5, target / true_res), cap - it};
    SolveStats inner_stats;
    const Vector dx = solve_spd(a, r, inner, {}, &inner_stats);
    it += std::max<std::size_t>(1, inner_stats.iterations);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    a.multiply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    true_res = norm2(r);
  }
  if (stats) *stats = {it, true_res / bnorm};
  return x;
}

}  // namespace coefid
