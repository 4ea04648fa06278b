// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cagat/graph.hpp"
#include "cagat/model.hpp"

namespace cagat {

struct TrainConfig {
  double lr = 0.005;
  int max_epochs = 10000;
  int patience = 100;          // "no new strict val-loss minimum for this many epochs"
  double weight_decay = 5e-4;  // decoupled; 0 disables
  int labels_per_class = 20;   // L
  int val_per_class = 20;
  std::vector<std::uint64_t> seeds = {0};
  int jobs = 1;

  void validate() const;
};

/// Network shape and regularization; build() instantiates the 2-layer model.
struct NetworkSpec {
  int hidden_dim = 8;
  int hidden_heads = 8;
  int out_heads = 1;
  DiffusionConfig diffusion;
  double lambda = 0.3;
  int outer_steps = 3;  // K
  double dropout = 0.6;
  bool renormalize = false;

  CaGATNetwork build(int in_dim, int num_classes) const;
};

/// Exactly one of the two must be set; sparse wins for bag-of-words inputs.
struct FeatureRef {
  const SparseMatrix* sparse = nullptr;
  const DenseMatrix* dense = nullptr;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<double> train_curve;  // evaluation-mode loss per epoch
  std::vector<double> val_curve;
  int best_epoch = -1;  // epoch of the strict validation-loss minimum
  int stop_epoch = -1;  // last epoch actually run
  double best_val_loss = 0.0;
  double final_train_loss = 0.0;  // train loss at best_epoch
  double test_accuracy = 0.0;     // at the restored best checkpoint
  double wall_seconds = 0.0;
};

struct AggregateResult {
  std::vector<RunResult> runs;  // sorted by seed
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over runs
};

/// Full-batch Adam with early stopping. Restores the best-validation
/// parameters into `net` before measuring test accuracy. The dropout stream
/// comes from `dropout_rng`. Throws NumericError with an epoch diagnostic if
/// the loss goes non-finite.
RunResult train_once(CaGATNetwork& net, const DatasetBundle& bundle, const FeatureRef& features,
                     const DiffusionContext& ctx, const SplitMasks& masks, const TrainConfig& cfg,
                     Rng& dropout_rng);

/// One independent run per seed: fresh splits, fresh init, fresh dropout
/// stream, all derived from the seed alone (so sweeps sharing seeds are
/// paired on identical splits). jobs > 1 runs seeds in worker threads.
AggregateResult run_repeated(const DatasetBundle& bundle, const FeatureRef& features,
                             const DiffusionContext& ctx, const NetworkSpec& spec,
                             const TrainConfig& cfg);

AggregateResult aggregate(std::vector<RunResult> runs);

enum class SweepAxis { kAlpha, kLambda, kXi };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepCell {
  double value = 0.0;
  AggregateResult agg;
};

/// run_repeated per axis value with shared seeds (paired splits).
std::vector<SweepCell> sweep(const DatasetBundle& bundle, const FeatureRef& features,
                             const DiffusionContext& ctx, const NetworkSpec& base,
                             const TrainConfig& cfg, SweepAxis axis,
                             const std::vector<double>& values);

}  // namespace cagat
