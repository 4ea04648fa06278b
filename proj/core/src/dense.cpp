// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/dense.hpp"

#include <cmath>
#include <cstdlib>

namespace cagat {

DenseMatrix::DenseMatrix(int r, int c, double fill) : rows(r), cols(c) {
  if (r < 0 || c < 0) throw ShapeError("DenseMatrix: negative dimension");
  data.assign(static_cast<std::size_t>(r) * c, fill);
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rws) {
  const int r = static_cast<int>(rws.size());
  const int c = r == 0 ? 0 : static_cast<int>(rws.begin()->size());
  DenseMatrix m(r, c);
  int i = 0;
  for (const auto& row : rws) {
    if (static_cast<int>(row.size()) != c) throw ShapeError("from_rows: ragged rows");
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::string DenseMatrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: " + a.shape_str() + " * " + b.shape_str());
  DenseMatrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<std::size_t>(i) * a.cols];
    double* orow = &out.data[static_cast<std::size_t>(i) * b.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

DenseMatrix transposed(const DenseMatrix& a) {
  DenseMatrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix add_scaled(const DenseMatrix& a, double ca, const DenseMatrix& b, double cb) {
  if (!a.same_shape(b))
    throw ShapeError("add_scaled: " + a.shape_str() + " vs " + b.shape_str());
  DenseMatrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = ca * a.data[i] + cb * b.data[i];
  return out;
}

DenseMatrix scaled(const DenseMatrix& a, double c) {
  DenseMatrix out = a;
  for (double& v : out.data) v *= c;
  return out;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b))
    throw ShapeError("max_abs_diff: " + a.shape_str() + " vs " + b.shape_str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double sum_entries(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v;
  return s;
}

double trace_product(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows || a.rows != b.cols)
    throw ShapeError("trace_product: " + a.shape_str() + " vs " + b.shape_str());
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, i);
  return s;
}

bool all_finite(const DenseMatrix& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

DenseMatrix solve_dense(DenseMatrix a, DenseMatrix b) {
  if (a.rows != a.cols) throw ShapeError("solve_dense: matrix not square");
  if (a.rows != b.rows) throw ShapeError("solve_dense: rhs rows mismatch");
  const int n = a.rows;
  const int m = b.cols;
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;

  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best < 1e-13)
      throw NumericError("solve_dense: matrix singular or near-singular (pivot " +
                         std::to_string(best) + ")");
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      for (int j = 0; j < m; ++j) std::swap(b(k, j), b(p, j));
    }
    const double inv = 1.0 / a(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) * inv;
      if (f == 0.0) continue;
      a(i, k) = 0.0;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (int j = 0; j < m; ++j) b(i, j) -= f * b(k, j);
    }
  }
  // back substitution
  for (int k = n - 1; k >= 0; --k) {
    const double inv = 1.0 / a(k, k);
    for (int j = 0; j < m; ++j) {
      double s = b(k, j);
      for (int i = k + 1; i < n; ++i) s -= a(k, i) * b(i, j);
      b(k, j) = s * inv;
    }
  }
  return b;
}

double spectral_radius_estimate(const DenseMatrix& a, int iterations) {
  if (a.rows != a.cols) throw ShapeError("spectral_radius_estimate: not square");
  const int n = a.rows;
  if (n == 0) return 0.0;
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (int i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  return lambda;
}

}  // namespace cagat
