// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/synthetic.hpp"

#include <algorithm>
#include <unordered_set>

#include "cagat/errors.hpp"

namespace cagat {

void SyntheticSpec::validate() const {
  if (n < 2 || d < 1 || c < 1 || edges < 0) throw ConfigError("synthetic: bad counts");
  if (c > n) throw ConfigError("synthetic: more classes than nodes");
  if (edges > static_cast<long>(n) * (n - 1) / 2)
    throw ConfigError("synthetic: more edges than node pairs");
  if (homophily < 0.0 || homophily > 1.0) throw ConfigError("synthetic: homophily in [0,1]");
  if (signature_rate < 0.0 || signature_rate > 1.0)
    throw ConfigError("synthetic: signature_rate in [0,1]");
  if (words_per_node < 1) throw ConfigError("synthetic: words_per_node >= 1");
}

SyntheticSpec synthetic_preset(const std::string& name) {
  SyntheticSpec s;
  s.name = name;
  if (name == "cora") {
    s.n = 2485; s.d = 1433; s.c = 7; s.edges = 7554;
  } else if (name == "citeseer") {
    s.n = 2110; s.d = 3703; s.c = 6; s.edges = 5778;
  } else if (name == "pubmed") {
    s.n = 19717; s.d = 500; s.c = 3; s.edges = 64041;
  } else if (name == "cora_ml") {
    s.n = 2810; s.d = 2879; s.c = 7; s.edges = 7981;
  } else {
    throw ConfigError("unknown synthetic preset '" + name +
                      "' (expected cora, citeseer, pubmed, or cora_ml)");
  }
  return s;
}

DatasetBundle make_synthetic(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const int n = spec.n, d = spec.d, c = spec.c;

  // Labels: near-equal class sizes, shuffled over node ids.
  std::vector<int> labels;
  labels.reserve(n);
  for (int i = 0; i < n; ++i) labels.push_back(i % c);
  rng.shuffle(labels);
  std::vector<std::vector<int>> members(c);
  for (int i = 0; i < n; ++i) members[labels[i]].push_back(i);

  // Exactly spec.edges distinct undirected pairs, homophilous on average.
  std::unordered_set<long long> seen;
  seen.reserve(static_cast<std::size_t>(spec.edges) * 2);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(spec.edges);
  while (static_cast<long>(pairs.size()) < spec.edges) {
    int u = rng.uniform_int(n), v;
    if (rng.uniform() < spec.homophily) {
      const auto& cls = members[labels[u]];
      v = cls[rng.uniform_int(static_cast<int>(cls.size()))];
    } else {
      v = rng.uniform_int(n);
      if (labels[v] == labels[u]) continue;
    }
    if (u == v) continue;
    const int a = std::min(u, v), b = std::max(u, v);
    const long long key = static_cast<long long>(a) * n + b;
    if (seen.insert(key).second) pairs.emplace_back(a, b);
  }

  // Binary bag-of-words: each class leans on its own vocabulary block.
  DenseMatrix x(n, d);
  const int block = std::max(1, d / c);
  for (int i = 0; i < n; ++i) {
    const int lo = labels[i] * block;
    const int hi = std::min(d, lo + block);
    const int words = std::max(2, spec.words_per_node + rng.uniform_int(7) - 3);
    for (int w = 0; w < words; ++w) {
      const int dim = rng.uniform() < spec.signature_rate
                          ? lo + rng.uniform_int(hi - lo)
                          : rng.uniform_int(d);
      x(i, dim) = 1.0;
    }
  }

  DatasetBundle bundle;
  bundle.name = spec.name;
  bundle.graph = build_graph(n, pairs);
  bundle.features = std::move(x);
  bundle.labels = std::move(labels);
  bundle.num_classes = c;
  bundle.validate();
  return bundle;
}

}  // namespace cagat
