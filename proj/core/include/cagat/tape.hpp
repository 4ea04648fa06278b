// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cagat/dense.hpp"
#include "cagat/rng.hpp"
#include "cagat/sparse.hpp"

namespace cagat {

/// Handle to a tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Unary { kLeakyRelu, kElu, kRelu, kExp, kLog };

/// Reverse-mode tape over dense matrices and values bound to a fixed sparse
/// pattern. Nodes are recorded in topological order; backward() traverses
/// them in reverse, so consumers are visited before producers. Confined to a
/// single thread.
class Tape {
 public:
  struct Options {
    bool check_finite = true;
    // Test hook: poisons the LeakyReLU backward rule so gradient checks must
    // detect the mismatch (negative control).
    bool corrupt_backward = false;
  };

  Tape() = default;
  explicit Tape(Options opts) : opts_(opts) {}

  // --- leaves -------------------------------------------------------------
  Var dense_leaf(const DenseMatrix& value, bool requires_grad);
  Var pattern_leaf(const SparseMatrix& value, bool requires_grad);

  // --- dense ops ----------------------------------------------------------
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b) { return axpby(a, b, 1.0, 1.0); }
  Var axpby(Var a, Var b, double ca, double cb);  // ca*a + cb*b, shapes equal
  Var add3(Var a, Var b, Var c, double ca, double cb, double cc);
  Var scale(Var a, double c);
  Var unary(Var a, Unary kind, double slope = 0.2);
  Var slice_rows(Var a, int r0, int r1);  // rows [r0, r1)
  Var concat_cols(std::span<const Var> parts);
  Var average(std::span<const Var> parts);
  Var sum(Var a);  // 1x1
  Var row_normalize(Var a);  // divide each row by its sum

  // --- sparse / pattern ops -------------------------------------------------
  /// s (values on a pattern) times dense d.
  Var spmm(Var s, Var d);
  /// Constant sparse matrix times dense variable (gradient flows into d only).
  Var spmm_const(const SparseMatrix& s, Var d);
  /// Per-entry e=(i,j) of pat: out[e] = a[i] + b[j]; a, b are n x 1.
  Var gather_pair_sum(Var a, Var b, PatternPtr pat);
  /// Softmax within each pattern row (max-subtracted). Rows must be non-empty.
  Var segment_softmax(Var pv);
  /// Divide each pattern row by its value sum.
  Var segment_normalize(Var pv);
  /// proj_P(abar * S * abar^T) through a precomputed plan.
  Var masked_triple(Var s, const TripleProductPlan& plan);
  /// out[e=(i,j)] = <h_i, h_j> for dense h (n x k).
  Var masked_gram(Var h, PatternPtr pat);
  Var to_dense(Var pv);                  // scatter onto rows x cols
  Var project(Var d, PatternPtr pat);    // gather pattern entries of dense d

  // --- model-level ops ------------------------------------------------------
  /// Mean over `mask` of -log softmax(logits)_i[label_i]; logits n x c.
  Var masked_cross_entropy(Var logits, std::span<const int> labels, std::span<const int> mask);
  /// Inverted dropout; identity when disabled or rate == 0.
  Var dropout(Var a, double rate, Rng& rng, bool enabled);

  // --- access ---------------------------------------------------------------
  int rows(Var v) const { return node(v).rows; }
  int cols(Var v) const { return node(v).cols; }
  bool is_pattern(Var v) const { return node(v).pat != nullptr; }
  const PatternPtr& pattern(Var v) const { return node(v).pat; }
  const std::vector<double>& value(Var v) const { return node(v).value; }
  DenseMatrix dense_value(Var v) const;
  SparseMatrix sparse_value(Var v) const;
  const std::vector<double>& grad(Var v) const;
  DenseMatrix dense_grad(Var v) const;
  double scalar_value(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs all backward rules in reverse order.
  /// `loss` must be a 1x1 dense node.
  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }
  const Options& options() const { return opts_; }

 private:
  struct Node {
    int rows = 0, cols = 0;  // dense shape; for pattern nodes: pat->rows/cols
    PatternPtr pat;          // null => dense
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::function<void(Tape&)> backward;  // null for leaves / no-grad nodes
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  Var push_dense(int rows, int cols, bool requires_grad, const char* op);
  Var push_pattern(PatternPtr pat, bool requires_grad, const char* op);
  void finite_check(Var v, const char* op) const;
  bool any_grad(std::initializer_list<Var> vs) const;

  std::vector<Node> nodes_;
  Options opts_;
};

}  // namespace cagat
