// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "cagat/dense.hpp"

namespace cagat {

/// Immutable CSR structure: row offsets plus per-row sorted column indices.
/// Matrices sharing a pattern hold a shared_ptr to one instance, so the
/// support stays fixed while values change.
struct SparsePattern {
  int rows = 0;
  int cols = 0;
  std::vector<int> offsets;   // size rows + 1, monotone
  std::vector<int> cols_idx;  // strictly increasing within each row

  int nnz() const { return static_cast<int>(cols_idx.size()); }
  int row_begin(int r) const { return offsets[r]; }
  int row_end(int r) const { return offsets[r + 1]; }
  int row_size(int r) const { return offsets[r + 1] - offsets[r]; }
  /// Position of entry (r, c) or -1. Binary search within the row.
  int find(int r, int c) const;
  bool has_full_diagonal() const;

  /// Builds from (row, col) pairs; duplicates collapse to one entry.
  static SparsePattern from_entries(int rows, int cols, std::vector<std::pair<int, int>> entries);

  void validate() const;  // throws ShapeError on structural violations
};

using PatternPtr = std::shared_ptr<const SparsePattern>;

/// Values on a fixed SparsePattern.
struct SparseMatrix {
  PatternPtr pattern;
  std::vector<double> values;

  SparseMatrix() = default;
  explicit SparseMatrix(PatternPtr pat, double fill = 0.0)
      : pattern(std::move(pat)), values(pattern ? pattern->cols_idx.size() : 0, fill) {}
  SparseMatrix(PatternPtr pat, std::vector<double> vals);

  int rows() const { return pattern ? pattern->rows : 0; }
  int cols() const { return pattern ? pattern->cols : 0; }
  int nnz() const { return pattern ? pattern->nnz() : 0; }

  double at(int r, int c) const;  // 0.0 off-pattern
  DenseMatrix to_dense() const;
  /// Keeps entries of d that fall on `pat`, drops the rest.
  static SparseMatrix project(const PatternPtr& pat, const DenseMatrix& d);
};

/// Reference product s * d (also the oracle for the tape spmm op).
DenseMatrix spmm_ref(const SparseMatrix& s, const DenseMatrix& d);

/// CSR copy of a dense matrix keeping entries with |value| > tol.
SparseMatrix sparse_from_dense(const DenseMatrix& d, double tol = 0.0);

/// Precomputed linear map S |-> proj_P(abar * S * abar^T) for values living on
/// pattern P. For each output entry (i,j) it stores the contributing S
/// positions with coefficient abar_ih * abar_jk. Built once per graph; the
/// diffusion coefficients are training constants.
struct TripleProductPlan {
  PatternPtr pattern;
  std::vector<std::int64_t> offsets;  // per output entry
  std::vector<int> src;               // S value position
  std::vector<double> coeff;

  static TripleProductPlan build(const SparseMatrix& abar);

  /// out[e] = sum over plan entries of coeff * s[src]
  void apply(const double* s, double* out) const;
  /// gs[src] += coeff * gout[e]  (adjoint of apply)
  void apply_adjoint(const double* gout, double* gs) const;
  std::int64_t triple_count() const { return static_cast<std::int64_t>(src.size()); }
};

}  // namespace cagat
