// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace cagat {

int SparsePattern::find(int r, int c) const {
  const int lo = offsets[r], hi = offsets[r + 1];
  auto it = std::lower_bound(cols_idx.begin() + lo, cols_idx.begin() + hi, c);
  if (it != cols_idx.begin() + hi && *it == c)
    return static_cast<int>(it - cols_idx.begin());
  return -1;
}

bool SparsePattern::has_full_diagonal() const {
  for (int r = 0; r < rows; ++r)
    if (find(r, r) < 0) return false;
  return true;
}

SparsePattern SparsePattern::from_entries(int rows, int cols,
                                          std::vector<std::pair<int, int>> entries) {
  for (const auto& [r, c] : entries)
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw ShapeError("SparsePattern: entry (" + std::to_string(r) + "," + std::to_string(c) +
                       ") out of range");
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  SparsePattern p;
  p.rows = rows;
  p.cols = cols;
  p.offsets.assign(rows + 1, 0);
  p.cols_idx.reserve(entries.size());
  for (const auto& [r, c] : entries) {
    p.offsets[r + 1]++;
    p.cols_idx.push_back(c);
  }
  for (int r = 0; r < rows; ++r) p.offsets[r + 1] += p.offsets[r];
  return p;
}

void SparsePattern::validate() const {
  if (static_cast<int>(offsets.size()) != rows + 1)
    throw ShapeError("SparsePattern: offsets size");
  if (offsets.front() != 0 || offsets.back() != nnz())
    throw ShapeError("SparsePattern: offsets endpoints");
  for (int r = 0; r < rows; ++r) {
    if (offsets[r + 1] < offsets[r]) throw ShapeError("SparsePattern: offsets not monotone");
    for (int k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (cols_idx[k] < 0 || cols_idx[k] >= cols)
        throw ShapeError("SparsePattern: column out of range");
      if (k > offsets[r] && cols_idx[k] <= cols_idx[k - 1])
        throw ShapeError("SparsePattern: columns not strictly increasing in row " +
                         std::to_string(r));
    }
  }
}

SparseMatrix::SparseMatrix(PatternPtr pat, std::vector<double> vals)
    : pattern(std::move(pat)), values(std::move(vals)) {
  if (!pattern || static_cast<int>(values.size()) != pattern->nnz())
    throw ShapeError("SparseMatrix: value count does not match pattern");
}

double SparseMatrix::at(int r, int c) const {
  const int pos = pattern->find(r, c);
  return pos < 0 ? 0.0 : values[pos];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows(), cols());
  for (int r = 0; r < rows(); ++r)
    for (int k = pattern->row_begin(r); k < pattern->row_end(r); ++k)
      d(r, pattern->cols_idx[k]) = values[k];
  return d;
}

SparseMatrix SparseMatrix::project(const PatternPtr& pat, const DenseMatrix& d) {
  if (d.rows != pat->rows || d.cols != pat->cols)
    throw ShapeError("project: dense " + d.shape_str() + " vs pattern");
  SparseMatrix s(pat);
  for (int r = 0; r < pat->rows; ++r)
    for (int k = pat->row_begin(r); k < pat->row_end(r); ++k)
      s.values[k] = d(r, pat->cols_idx[k]);
  return s;
}

DenseMatrix spmm_ref(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols() != d.rows)
    throw ShapeError("spmm: " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                     " * " + d.shape_str());
  DenseMatrix out(s.rows(), d.cols);
  const auto& pat = *s.pattern;
  for (int i = 0; i < pat.rows; ++i) {
    double* orow = &out.data[static_cast<std::size_t>(i) * d.cols];
    for (int k = pat.row_begin(i); k < pat.row_end(i); ++k) {
      const double v = s.values[k];
      const double* drow = &d.data[static_cast<std::size_t>(pat.cols_idx[k]) * d.cols];
      for (int j = 0; j < d.cols; ++j) orow[j] += v * drow[j];
    }
  }
  return out;
}

TripleProductPlan TripleProductPlan::build(const SparseMatrix& abar) {
  const auto& pat = *abar.pattern;
  if (pat.rows != pat.cols) throw ShapeError("TripleProductPlan: abar not square");

  TripleProductPlan plan;
  plan.pattern = abar.pattern;
  plan.offsets.assign(pat.nnz() + 1, 0);

  // out(i,j) = sum_{h in row i} abar_ih * sum_{k in row h  ∩  row j} S_hk * abar_jk
  for (int i = 0; i < pat.rows; ++i) {
    for (int e = pat.row_begin(i); e < pat.row_end(i); ++e) {
      const int j = pat.cols_idx[e];
      for (int hpos = pat.row_begin(i); hpos < pat.row_end(i); ++hpos) {
        const int h = pat.cols_idx[hpos];
        const double a_ih = abar.values[hpos];
        // sorted merge of row h (S positions) against row j (abar positions)
        int kp = pat.row_begin(h);
        int jp = pat.row_begin(j);
        const int kend = pat.row_end(h), jend = pat.row_end(j);
        while (kp < kend && jp < jend) {
          const int ck = pat.cols_idx[kp], cj = pat.cols_idx[jp];
          if (ck < cj) {
            ++kp;
          } else if (cj < ck) {
            ++jp;
          } else {
            plan.src.push_back(kp);
            plan.coeff.push_back(a_ih * abar.values[jp]);
            ++kp;
            ++jp;
          }
        }
      }
      plan.offsets[e + 1] = static_cast<std::int64_t>(plan.src.size());
    }
  }
  return plan;
}

void TripleProductPlan::apply(const double* s, double* out) const {
  const int ne = pattern->nnz();
  for (int e = 0; e < ne; ++e) {
    double acc = 0.0;
    for (std::int64_t t = offsets[e]; t < offsets[e + 1]; ++t) acc += coeff[t] * s[src[t]];
    out[e] = acc;
  }
}

void TripleProductPlan::apply_adjoint(const double* gout, double* gs) const {
  const int ne = pattern->nnz();
  for (int e = 0; e < ne; ++e) {
    const double g = gout[e];
    if (g == 0.0) continue;
    for (std::int64_t t = offsets[e]; t < offsets[e + 1]; ++t) gs[src[t]] += coeff[t] * g;
  }
}

SparseMatrix sparse_from_dense(const DenseMatrix& d, double tol) {
  SparsePattern pat;
  pat.rows = d.rows;
  pat.cols = d.cols;
  pat.offsets.assign(d.rows + 1, 0);
  std::vector<double> values;
  for (int i = 0; i < d.rows; ++i) {
    for (int j = 0; j < d.cols; ++j) {
      const double v = d(i, j);
      if (std::abs(v) > tol) {
        pat.cols_idx.push_back(j);
        values.push_back(v);
      }
    }
    pat.offsets[i + 1] = static_cast<int>(pat.cols_idx.size());
  }
  return SparseMatrix(std::make_shared<SparsePattern>(std::move(pat)), std::move(values));
}

}  // namespace cagat
