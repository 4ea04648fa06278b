// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "cagat/errors.hpp"
#include "cagat/graph.hpp"

#include "test_support.hpp"

using namespace cagat;
using namespace testsupport;

TEST_CASE("build_graph canonicalizes edges") {
  Graph g = build_graph(4, {{1, 0}, {0, 1}, {2, 2}, {3, 2}, {2, 3}});
  CHECK(g.n == 4);
  CHECK(g.num_edges() == 2);  // (0,1) deduped, (2,2) dropped, (2,3) deduped
  CHECK(g.edges[0] == std::pair<int, int>(0, 1));
  CHECK(g.edges[1] == std::pair<int, int>(2, 3));
  CHECK(g.degrees() == std::vector<int>{1, 1, 1, 1});

  CHECK_THROWS_AS(build_graph(3, {{0, 3}}), DataError);
  CHECK_THROWS_AS(build_graph(3, {{-1, 0}}), DataError);
}

TEST_CASE("binary adjacency and row normalization") {
  Graph g = build_graph(3, {{0, 1}, {1, 2}});
  SparseMatrix a = binary_adjacency(g, false);
  DenseMatrix ad = a.to_dense();
  CHECK(ad(0, 1) == 1.0);
  CHECK(ad(1, 0) == 1.0);
  CHECK(ad(0, 0) == 0.0);
  CHECK(ad(0, 2) == 0.0);

  SparseMatrix asl = binary_adjacency(g, true);
  CHECK(asl.pattern->has_full_diagonal());
  SparseMatrix abar = row_normalize_sparse(asl);
  DenseMatrix nd = abar.to_dense();
  CHECK(nd(0, 0) == doctest::Approx(0.5));
  CHECK(nd(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(nd(1, 2) == doctest::Approx(1.0 / 3.0));
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += nd(i, j);
    CHECK(s == doctest::Approx(1.0));
  }

  // isolated node without self-loops has a zero row
  Graph iso = build_graph(3, {{0, 1}});
  CHECK_THROWS_AS(row_normalize_sparse(binary_adjacency(iso, false)), DomainError);
  CHECK(diffusion_matrix(iso, true).to_dense()(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("splits are disjoint, class-balanced, and exhaustive") {
  DatasetBundle b;
  b.name = "toy";
  b.graph = two_cliques(12);  // 24 nodes
  b.features = DenseMatrix(24, 2, 1.0);
  b.num_classes = 2;
  b.labels.assign(24, 0);
  for (int i = 12; i < 24; ++i) b.labels[i] = 1;
  b.validate();

  Rng rng(5);
  SplitMasks m = make_splits(b, 3, 4, rng);
  CHECK(m.train.size() == 6);
  CHECK(m.val.size() == 8);
  CHECK(m.test.size() == 24 - 6 - 8);

  std::set<int> seen;
  for (const auto* part : {&m.train, &m.val, &m.test})
    for (int i : *part) {
      CHECK(seen.insert(i).second);  // disjoint
      CHECK(i >= 0);
      CHECK(i < 24);
    }
  CHECK(seen.size() == 24);

  int c0 = 0;
  for (int i : m.train) c0 += b.labels[i] == 0 ? 1 : 0;
  CHECK(c0 == 3);  // per-class balance

  // same seed, same split; different seed, different split (overwhelmingly)
  Rng r2(5);
  SplitMasks m2 = make_splits(b, 3, 4, r2);
  CHECK(m2.train == m.train);
  CHECK(m2.val == m.val);
  Rng r3(6);
  SplitMasks m3 = make_splits(b, 3, 4, r3);
  CHECK(m3.train != m.train);

  CHECK_THROWS_AS(make_splits(b, 10, 2, rng), DataError);  // class too small
}

TEST_CASE("accuracy counts argmax hits with first-index tie breaking") {
  DenseMatrix logits(3, 2);
  logits(0, 0) = 2.0;
  logits(0, 1) = 1.0;  // argmax 0
  logits(1, 0) = 0.5;
  logits(1, 1) = 0.9;  // argmax 1
  logits(2, 0) = 0.7;
  logits(2, 1) = 0.7;  // tie -> 0
  std::vector<int> labels = {0, 0, 0};
  CHECK(accuracy(logits, labels, {0, 1, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(logits, labels, {0}) == doctest::Approx(1.0));
}

TEST_CASE("l1_normalize_rows scales rows and keeps zero rows") {
  DenseMatrix x(2, 3);
  x(0, 0) = 2.0;
  x(0, 2) = 2.0;
  l1_normalize_rows(x);
  CHECK(x(0, 0) == doctest::Approx(0.5));
  CHECK(x(0, 1) == 0.0);
  CHECK(x(1, 0) == 0.0);  // zero row untouched
}

TEST_CASE("bundle validation rejects inconsistencies") {
  DatasetBundle b;
  b.name = "bad";
  b.graph = build_graph(3, {{0, 1}});
  b.features = DenseMatrix(3, 2, 1.0);
  b.num_classes = 2;
  b.labels = {0, 1, 0};
  b.validate();

  DatasetBundle wrong_rows = b;
  wrong_rows.features = DenseMatrix(2, 2, 1.0);
  CHECK_THROWS_AS(wrong_rows.validate(), DataError);

  DatasetBundle bad_label = b;
  bad_label.labels = {0, 1, 2};
  CHECK_THROWS_AS(bad_label.validate(), DataError);
}
