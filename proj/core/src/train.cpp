// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cagat/errors.hpp"

namespace cagat {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 0 || patience >= max_epochs)
    throw ConfigError("patience must lie in [0, max_epochs)");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
  if (labels_per_class < 1) throw ConfigError("labels per class must be >= 1");
  if (val_per_class < 1) throw ConfigError("validation nodes per class must be >= 1");
  if (seeds.empty()) throw ConfigError("seed list must be non-empty");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

CaGATNetwork NetworkSpec::build(int in_dim, int num_classes) const {
  return make_network(in_dim, hidden_dim, num_classes, hidden_heads, out_heads, diffusion, lambda,
                      outer_steps, dropout, renormalize);
}

namespace {

// Tape buffers are large and short-lived; with the default glibc settings
// they churn through mmap/munmap every epoch. Keep them on the heap.
void tune_allocator() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_MAX, 0);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
    return true;
  }();
  (void)once;
#endif
}

LayerInput feature_input(Tape& tape, const FeatureRef& features) {
  if ((features.sparse == nullptr) == (features.dense == nullptr))
    throw ShapeError("train: provide exactly one of sparse/dense features");
  if (features.sparse) return LayerInput::from_sparse(features.sparse);
  return LayerInput::from_var(tape.dense_leaf(*features.dense, false));
}

struct EvalStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  DenseMatrix logits;
};

// Per-op finite scans double the memory traffic of an epoch; the hot loop
// relies on the explicit loss check below and on adam_step instead.
Tape::Options fast_tape() {
  Tape::Options opts;
  opts.check_finite = false;
  return opts;
}

EvalStats evaluate(const CaGATNetwork& net, const DatasetBundle& bundle,
                   const FeatureRef& features, const DiffusionContext& ctx,
                   const SplitMasks& masks) {
  Tape tape(fast_tape());
  std::vector<Var> vars = net.params.leaves(tape, /*requires_grad=*/false);
  Var logits = network_forward_tape(tape, net, vars, feature_input(tape, features), ctx,
                                    ForwardOptions{});
  EvalStats stats;
  stats.train_loss = tape.scalar_value(tape.masked_cross_entropy(logits, bundle.labels,
                                                                 masks.train));
  stats.val_loss = tape.scalar_value(tape.masked_cross_entropy(logits, bundle.labels, masks.val));
  stats.logits = tape.dense_value(logits);
  return stats;
}

}  // namespace

RunResult train_once(CaGATNetwork& net, const DatasetBundle& bundle, const FeatureRef& features,
                     const DiffusionContext& ctx, const SplitMasks& masks, const TrainConfig& cfg,
                     Rng& dropout_rng) {
  cfg.validate();
  bundle.validate();
  tune_allocator();
  const auto t0 = std::chrono::steady_clock::now();

  AdamConfig adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;
  ForwardOptions train_opts;
  train_opts.training = true;
  train_opts.dropout_rng = &dropout_rng;

  RunResult res;
  double best = std::numeric_limits<double>::infinity();
  std::vector<DenseMatrix> best_values;
  int wait = 0;
  const int stop_after = std::max(cfg.patience, 1);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    try {
      Tape tape(fast_tape());
      std::vector<Var> vars = net.params.leaves(tape);
      Var logits = network_forward_tape(tape, net, vars, feature_input(tape, features), ctx,
                                        train_opts);
      Var loss = tape.masked_cross_entropy(logits, bundle.labels, masks.train);
      if (!std::isfinite(tape.scalar_value(loss)))
        throw NumericError("non-finite training loss");
      tape.backward(loss);
      net.params.zero_grad();
      net.params.accumulate_grads(tape, vars);
      net.params.adam_step(adam);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    const EvalStats stats = evaluate(net, bundle, features, ctx, masks);
    res.train_curve.push_back(stats.train_loss);
    res.val_curve.push_back(stats.val_loss);
    res.stop_epoch = epoch;

    if (stats.val_loss < best) {
      best = stats.val_loss;
      res.best_epoch = epoch;
      best_values = net.params.snapshot_values();
      wait = 0;
    } else if (++wait >= stop_after) {
      break;
    }
  }

  net.params.restore_values(best_values);
  res.best_val_loss = best;
  res.final_train_loss = res.train_curve[res.best_epoch];
  const EvalStats final_stats = evaluate(net, bundle, features, ctx, masks);
  res.test_accuracy = accuracy(final_stats.logits, bundle.labels, masks.test);
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

AggregateResult aggregate(std::vector<RunResult> runs) {
  if (runs.empty()) throw ConfigError("aggregate: no runs");
  std::sort(runs.begin(), runs.end(),
            [](const RunResult& a, const RunResult& b) { return a.seed < b.seed; });
  AggregateResult agg;
  double sum = 0.0;
  for (const RunResult& r : runs) sum += r.test_accuracy;
  agg.mean_accuracy = sum / static_cast<double>(runs.size());
  double var = 0.0;
  for (const RunResult& r : runs) {
    const double d = r.test_accuracy - agg.mean_accuracy;
    var += d * d;
  }
  agg.std_accuracy = std::sqrt(var / static_cast<double>(runs.size()));
  agg.runs = std::move(runs);
  return agg;
}

AggregateResult run_repeated(const DatasetBundle& bundle, const FeatureRef& features,
                             const DiffusionContext& ctx, const NetworkSpec& spec,
                             const TrainConfig& cfg) {
  cfg.validate();
  const int in_dim = features.sparse ? features.sparse->cols() : features.dense->cols;

  std::vector<RunResult> results(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  auto run_seed = [&](std::size_t i) {
    try {
      const std::uint64_t seed = cfg.seeds[i];
      Rng root(seed);
      Rng split_rng = root.fork(1);
      Rng init_rng = root.fork(2);
      Rng dropout_rng = root.fork(3);
      SplitMasks masks = make_splits(bundle, cfg.labels_per_class, cfg.val_per_class, split_rng);
      CaGATNetwork net = spec.build(in_dim, bundle.num_classes);
      net.init(init_rng);
      results[i] = train_once(net, bundle, features, ctx, masks, cfg, dropout_rng);
      results[i].seed = seed;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(cfg.seeds.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) run_seed(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cfg.seeds.size(); i = next.fetch_add(1))
          run_seed(i);
      });
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return aggregate(std::move(results));
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "alpha") return SweepAxis::kAlpha;
  if (name == "lambda") return SweepAxis::kLambda;
  if (name == "xi") return SweepAxis::kXi;
  throw ConfigError("unknown sweep axis '" + name + "' (expected alpha, lambda, or xi)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kXi: return "xi";
  }
  return "?";
}

std::vector<SweepCell> sweep(const DatasetBundle& bundle, const FeatureRef& features,
                             const DiffusionContext& ctx, const NetworkSpec& base,
                             const TrainConfig& cfg, SweepAxis axis,
                             const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep: value list must be non-empty");
  std::vector<SweepCell> table;
  table.reserve(values.size());
  for (double v : values) {
    NetworkSpec spec = base;
    switch (axis) {
      case SweepAxis::kAlpha: spec.diffusion.alpha = v; break;
      case SweepAxis::kLambda: spec.lambda = v; break;
      case SweepAxis::kXi: spec.diffusion.xi = v; break;
    }
    SweepCell cell;
    cell.value = v;
    cell.agg = run_repeated(bundle, features, ctx, spec, cfg);
    table.push_back(std::move(cell));
  }
  return table;
}

}  // namespace cagat
