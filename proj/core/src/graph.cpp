// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/graph.hpp"

#include <algorithm>
#include <cmath>

#include "cagat/errors.hpp"

namespace cagat {

std::vector<int> Graph::degrees() const {
  std::vector<int> d(n, 0);
  for (auto [i, j] : edges) {
    ++d[i];
    ++d[j];
  }
  return d;
}

Graph build_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 0) throw DataError("build_graph: negative node count");
  Graph g;
  g.n = n;
  g.edges.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw DataError("build_graph: edge endpoint out of range: (" + std::to_string(a) + ", " +
                      std::to_string(b) + ") with n = " + std::to_string(n));
    if (a == b) continue;  // self-loops are a matrix-construction concern
    g.edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

SparseMatrix binary_adjacency(const Graph& g, bool self_loops) {
  std::vector<std::pair<int, int>> entries;
  entries.reserve(2 * g.edges.size() + (self_loops ? g.n : 0));
  for (auto [i, j] : g.edges) {
    entries.emplace_back(i, j);
    entries.emplace_back(j, i);
  }
  if (self_loops)
    for (int i = 0; i < g.n; ++i) entries.emplace_back(i, i);
  auto pat = std::make_shared<SparsePattern>(
      SparsePattern::from_entries(g.n, g.n, std::move(entries)));
  return SparseMatrix(std::move(pat), 1.0);
}

SparseMatrix row_normalize_sparse(const SparseMatrix& a) {
  SparseMatrix out(a.pattern);
  const SparsePattern& p = *a.pattern;
  for (int i = 0; i < p.rows; ++i) {
    double s = 0.0;
    for (int k = p.row_begin(i); k < p.row_end(i); ++k) s += a.values[k];
    if (s <= 0.0)
      throw DomainError("row_normalize_sparse: row " + std::to_string(i) +
                        " has zero sum (isolated node? enable self-loops)");
    for (int k = p.row_begin(i); k < p.row_end(i); ++k) out.values[k] = a.values[k] / s;
  }
  return out;
}

SparseMatrix diffusion_matrix(const Graph& g, bool self_loops) {
  return row_normalize_sparse(binary_adjacency(g, self_loops));
}

void DatasetBundle::validate() const {
  if (features.rows != graph.n)
    throw DataError(name + ": feature rows " + std::to_string(features.rows) + " != n " +
                    std::to_string(graph.n));
  if (static_cast<int>(labels.size()) != graph.n)
    throw DataError(name + ": label count " + std::to_string(labels.size()) + " != n " +
                    std::to_string(graph.n));
  if (num_classes <= 0) throw DataError(name + ": num_classes must be positive");
  for (int i = 0; i < graph.n; ++i)
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw DataError(name + ": label out of range at node " + std::to_string(i));
  if (!all_finite(features)) throw DataError(name + ": non-finite feature value");
}

SplitMasks make_splits(const DatasetBundle& bundle, int per_class_train, int per_class_val,
                       Rng& rng) {
  if (per_class_train < 1 || per_class_val < 0)
    throw ConfigError("make_splits: need at least one training node per class");
  std::vector<std::vector<int>> by_class(bundle.num_classes);
  for (int i = 0; i < bundle.graph.n; ++i) by_class[bundle.labels[i]].push_back(i);

  SplitMasks out;
  for (int c = 0; c < bundle.num_classes; ++c) {
    auto& ids = by_class[c];
    if (static_cast<int>(ids.size()) < per_class_train + per_class_val + 1)
      throw DataError("make_splits: class " + std::to_string(c) + " has only " +
                      std::to_string(ids.size()) + " nodes; needs > " +
                      std::to_string(per_class_train + per_class_val));
    rng.shuffle(ids);
    int k = 0;
    for (; k < per_class_train; ++k) out.train.push_back(ids[k]);
    for (; k < per_class_train + per_class_val; ++k) out.val.push_back(ids[k]);
    for (; k < static_cast<int>(ids.size()); ++k) out.test.push_back(ids[k]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<int>& ids) {
  if (ids.empty()) throw DomainError("accuracy: empty id list");
  int hits = 0;
  for (int i : ids) {
    int best = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ids.size());
}

void l1_normalize_rows(DenseMatrix& x) {
  for (int i = 0; i < x.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols; ++j) s += std::abs(x(i, j));
    if (s == 0.0) continue;
    for (int j = 0; j < x.cols; ++j) x(i, j) /= s;
  }
}

}  // namespace cagat
