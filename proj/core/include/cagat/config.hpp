// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cagat/attention.hpp"
#include "cagat/train.hpp"

namespace cagat {

/// Experiment-level settings. Defaults follow the standard citation-benchmark
/// recipe.
struct ExperimentConfig {
  // model
  double alpha = 0.4;
  double xi = 1e-3;
  double lambda = 0.3;
  int outer_steps = 3;  // K
  int inner_steps = 2;  // T
  int hidden = 8;
  int heads = 8;
  int out_heads = 1;
  double dropout = 0.6;
  bool renormalize = false;

  // training
  double lr = 0.005;
  double weight_decay = 5e-4;
  int patience = 100;
  int max_epochs = 10000;
  int labels_per_class = 20;  // L
  int val_per_class = 20;
  int num_seeds = 10;
  std::uint64_t seed_base = 0;
  int jobs = 1;

  // data handling
  std::string mode = "auto";  // auto | dense | masked
  bool self_loops = true;
  bool normalize_features = true;  // L1 row normalization

  void validate() const;
  NetworkSpec network_spec() const;
  TrainConfig train_config() const;
  /// auto resolves to dense for n <= 3000, masked above.
  AttentionMode resolve_mode(int n) const;
  /// Stable key/value view (results provenance echo).
  std::vector<std::pair<std::string, std::string>> to_kv() const;
};

}  // namespace cagat
