// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "cagat/errors.hpp"

namespace cagat {

/// Row-major dense matrix of 64-bit floats. Column vectors are n x 1.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0);
  static DenseMatrix identity(int n);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rws);

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transposed(const DenseMatrix& a);
// ca*a + cb*b
DenseMatrix add_scaled(const DenseMatrix& a, double ca, const DenseMatrix& b, double cb);
DenseMatrix scaled(const DenseMatrix& a, double c);

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double sum_entries(const DenseMatrix& a);
double trace_product(const DenseMatrix& a, const DenseMatrix& b);  // Tr(a*b), a: m x n, b: n x m
bool all_finite(const DenseMatrix& a);

// Solves a*x = b by LU with partial pivoting; b may have multiple columns.
// Intended for test-scale systems. Throws NumericError when near-singular.
DenseMatrix solve_dense(DenseMatrix a, DenseMatrix b);

// Largest-magnitude eigenvalue estimate by power iteration (for spectral
// radius preconditions; test scale).
double spectral_radius_estimate(const DenseMatrix& a, int iterations = 100);

}  // namespace cagat
