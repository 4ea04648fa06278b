// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cagat/dense.hpp"
#include "cagat/rng.hpp"
#include "cagat/sparse.hpp"

namespace cagat {

/// Simple undirected graph: edges are stored once as (i, j) with i < j,
/// sorted and deduplicated. Self-loops never live in the edge list; they are
/// added on demand when building matrices.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  int num_edges() const { return static_cast<int>(edges.size()); }
  std::vector<int> degrees() const;  // without self-loops
};

/// Validates endpoints, folds (j, i) onto (i, j), drops duplicates and
/// self-edges. Throws DataError on out-of-range endpoints.
Graph build_graph(int n, const std::vector<std::pair<int, int>>& edges);

/// Symmetric 0/1 adjacency; optionally with the diagonal filled in.
SparseMatrix binary_adjacency(const Graph& g, bool self_loops);

/// Divides every row of a nonnegative sparse matrix by its row sum.
/// Throws DomainError on a zero row (isolated node without self-loop).
SparseMatrix row_normalize_sparse(const SparseMatrix& a);

/// Row-stochastic diffusion matrix: row_normalize(A + I) when self_loops,
/// else row_normalize(A).
SparseMatrix diffusion_matrix(const Graph& g, bool self_loops);

struct DatasetBundle {
  std::string name;
  Graph graph;
  DenseMatrix features;     // n x d
  std::vector<int> labels;  // size n, in [0, num_classes)
  int num_classes = 0;

  int n() const { return graph.n; }
  int feature_dim() const { return features.cols; }
  void validate() const;  // throws DataError on inconsistency
};

/// Node-id lists for one experiment split; disjoint, each sorted ascending.
struct SplitMasks {
  std::vector<int> train, val, test;
};

/// Per class: `per_class_train` train nodes and `per_class_val` val nodes
/// drawn without replacement; every remaining node goes to test. Throws
/// DataError when some class has fewer than train+val+1 nodes.
SplitMasks make_splits(const DatasetBundle& bundle, int per_class_train, int per_class_val,
                       Rng& rng);

/// Fraction of `ids` whose argmax row of `logits` matches labels.
double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<int>& ids);

/// Divides every feature row by its L1 norm; zero rows stay zero.
void l1_normalize_rows(DenseMatrix& x);

}  // namespace cagat
