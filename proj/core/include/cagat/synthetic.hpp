// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "cagat/graph.hpp"
#include "cagat/rng.hpp"

namespace cagat {

/// Planted-partition citation-style generator: homophilous edges plus sparse
/// binary bag-of-words features whose vocabulary blocks lean per-class.
struct SyntheticSpec {
  std::string name = "synthetic";
  int n = 0;
  int d = 0;
  int c = 0;
  long edges = 0;              // exact undirected edge count
  double homophily = 0.81;     // fraction of intra-class edges
  double signature_rate = 0.55;  // chance an active word comes from the class block
  int words_per_node = 18;     // mean active features per node

  void validate() const;
};

/// Shape presets matching the benchmark citation networks:
/// cora 2485/7554/1433/7, citeseer 2110/5778/3703/6,
/// pubmed 19717/64041/500/3, cora_ml 2810/7981/2879/7.
SyntheticSpec synthetic_preset(const std::string& name);

DatasetBundle make_synthetic(const SyntheticSpec& spec, Rng& rng);

}  // namespace cagat
