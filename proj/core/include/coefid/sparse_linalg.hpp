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

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace coefid {

using Vector = std::vector<double>;

/// Compressed-row sparsity pattern. Column indices are strictly increasing
/// within each row. Patterns are immutable and shared between matrices so
/// that linear combinations over one pattern reduce to value arithmetic.
class SparsityPattern {
 public:
  SparsityPattern(std::size_t rows, std::size_t cols,
                  std::vector<std::size_t> row_offsets,
                  std::vector<std::size_t> col_indices);

  /// Builds a pattern from an unordered list of (row, col) pairs; duplicates
  /// are merged.
  static std::shared_ptr<const SparsityPattern> from_entries(
      std::size_t rows, std::size_t cols,
      std::vector<std::pair<std::size_t, std::size_t>> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_indices_.size(); }
  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }

  /// Position of (row, col) in the value array, or npos when absent.
  std::size_t find(std::size_t row, std::size_t col) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
};

class SparseMatrix {
 public:
  SparseMatrix(std::shared_ptr<const SparsityPattern> pattern,
               bool symmetric = false);
  SparseMatrix(std::shared_ptr<const SparsityPattern> pattern, Vector values,
               bool symmetric = false);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return pattern_->rows(); }
  std::size_t cols() const { return pattern_->cols(); }
  std::size_t nnz() const { return pattern_->nnz(); }
  const SparsityPattern& pattern() const { return *pattern_; }
  const std::shared_ptr<const SparsityPattern>& shared_pattern() const {
    return pattern_;
  }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool flagged_symmetric() const { return symmetric_; }
  void set_symmetric_flag(bool s) { symmetric_ = s; }

  /// Entry (row, col); zero when outside the pattern.
  double at(std::size_t row, std::size_t col) const;
  /// Adds to an existing pattern entry; throws ContractViolation if absent.
  void add(std::size_t row, std::size_t col, double v);

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;
  Vector diagonal_values() const;
  Vector row_sums() const;

  /// max |a_ij - a_ji| <= rel_tol * max |a_ij|.
  bool is_symmetric(double rel_tol = 1e-13) const;

  /// Coordinate text dump: one `i j value` line per stored entry.
  void write_coordinates(std::ostream& out) const;

 private:
  std::shared_ptr<const SparsityPattern> pattern_;
  Vector values_;
  bool symmetric_;
};

/// Entrywise linear combination sum_k coeffs[k] * mats[k]. Matrices sharing
/// a pattern object combine in place; otherwise the union pattern is built.
/// The result is flagged symmetric iff every input is.
SparseMatrix axpy_combine(std::span<const double> coeffs,
                          std::span<const SparseMatrix* const> mats);
SparseMatrix axpy_combine(
    std::initializer_list<std::pair<double, const SparseMatrix*>> terms);

struct SolverOptions {
  double rel_tol = 1e-10;
  /// 0 selects the default cap of 10 * n.
  std::size_t max_iterations = 0;
};

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite
/// systems. Returns x with ||A x - b|| <= rel_tol * ||b||.
/// Throws ContractViolation if A is not (numerically) symmetric,
/// IndefiniteSystem on a nonpositive curvature direction, and NoConvergence
/// when the iteration cap is reached.
Vector solve_spd(const SparseMatrix& a, std::span<const double> b,
                 double rel_tol = 1e-10);
Vector solve_spd(const SparseMatrix& a, std::span<const double> b,
                 const SolverOptions& options,
                 std::span<const double> initial_guess = {},
                 SolveStats* stats = nullptr);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

}  // namespace coefid
