// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
//
// cagat: train/evaluate the context-aware graph attention model on a bundle
// directory, sweep one hyperparameter axis, or run the numeric self-tests.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cagat/config.hpp"
#include "cagat/data_io.hpp"
#include "cagat/errors.hpp"
#include "cagat/selftest.hpp"
#include "cagat/sparse.hpp"
#include "cagat/train.hpp"

namespace {

using namespace cagat;

struct IoOptions {
  std::string data;
  std::string out = ".";
};

// Shared experiment flags live on the root app so that one --config file (and
// one flag set) serves train, sweep, and print-config; subcommands fall
// through unmatched options to the root.
void add_experiment_flags(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--alpha", cfg.alpha, "Diffusion mixing weight, [0,1)")->capture_default_str();
  sub->add_option("--xi", cfg.xi, "Feature-similarity injection weight, >= 0")
      ->capture_default_str();
  sub->add_option("--lambda", cfg.lambda, "Propagation mixing weight, (0,1]")
      ->capture_default_str();
  sub->add_option("--K", cfg.outer_steps, "Outer unified iterations per layer")
      ->capture_default_str();
  sub->add_option("--T", cfg.inner_steps, "Inner diffusion steps per outer iteration")
      ->capture_default_str();
  sub->add_option("--hidden", cfg.hidden, "Hidden units per head")->capture_default_str();
  sub->add_option("--heads", cfg.heads, "Attention heads in the hidden layer")
      ->capture_default_str();
  sub->add_option("--out-heads", cfg.out_heads, "Attention heads in the output layer")
      ->capture_default_str();
  sub->add_option("--dropout", cfg.dropout, "Dropout rate on inputs and attention, [0,1)")
      ->capture_default_str();
  sub->add_flag("--renormalize,!--no-renormalize", cfg.renormalize,
                "Row-renormalize the attention matrix after each unified step")
      ->default_str("false");
  sub->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--weight-decay", cfg.weight_decay, "Decoupled weight decay")
      ->capture_default_str();
  sub->add_option("--patience", cfg.patience,
                  "Early-stopping patience in epochs without a new validation-loss minimum")
      ->capture_default_str();
  sub->add_option("--max-epochs", cfg.max_epochs, "Epoch cap")->capture_default_str();
  sub->add_option("--labels-per-class", cfg.labels_per_class, "Training labels per class (L)")
      ->capture_default_str();
  sub->add_option("--val-per-class", cfg.val_per_class, "Validation labels per class")
      ->capture_default_str();
  sub->add_option("--seeds", cfg.num_seeds, "Number of independent seeds")
      ->capture_default_str();
  sub->add_option("--seed-base", cfg.seed_base, "First seed; run i uses seed-base + i")
      ->capture_default_str();
  sub->add_option("--jobs", cfg.jobs, "Worker threads across seeds")->capture_default_str();
  sub->add_option("--mode", cfg.mode, "Attention storage: auto, dense, or masked")
      ->check(CLI::IsMember({"auto", "dense", "masked"}))
      ->capture_default_str();
  sub->add_flag("--self-loops,!--no-self-loops", cfg.self_loops,
                "Add self-loops before normalizing the adjacency")
      ->default_str("true");  // flag pairs do not capture bool defaults for config output
  sub->add_flag("--normalize-features,!--no-normalize-features", cfg.normalize_features,
                "L1-normalize feature rows")
      ->default_str("true");
  sub->set_config("--config", "", "Read options from a key=value config file");
}

void add_io_flags(CLI::App* sub, IoOptions& io) {
  sub->add_option("--data", io.data, "Bundle directory, or a name under $CAGAT_DATA_DIR")
      ->required()
      ->configurable(false);
  sub->add_option("--out", io.out, "Directory for results.json, aggregate.csv, curves.csv")
      ->capture_default_str()
      ->configurable(false);
}

std::string resolve_data_dir(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(fs::path(arg) / "manifest.json")) return arg;
  const char* root = std::getenv("CAGAT_DATA_DIR");
  const fs::path joined = fs::path(root ? root : "data") / arg;
  if (fs::exists(joined / "manifest.json")) return joined.string();
  throw DataError("no bundle at '" + arg + "' or '" + joined.string() + "' (missing manifest.json)");
}

void print_aggregate(const std::string& tag, const AggregateResult& agg) {
  for (const RunResult& r : agg.runs)
    std::printf("%s  seed %llu: test acc %.4f  best epoch %d  stopped %d  train loss %.4f  %.1fs\n",
                tag.c_str(), static_cast<unsigned long long>(r.seed), r.test_accuracy,
                r.best_epoch, r.stop_epoch, r.final_train_loss, r.wall_seconds);
  std::printf("%s  mean accuracy %.4f +/- %.4f over %zu seeds\n", tag.c_str(), agg.mean_accuracy,
              agg.std_accuracy, agg.runs.size());
}

int run_training(ExperimentConfig cfg, const IoOptions& io, const std::string* axis,
                 const std::vector<double>* values) {
  cfg.validate();
  const std::string dir = resolve_data_dir(io.data);
  DatasetBundle bundle = load_bundle(dir);
  std::printf("bundle %s: n=%d edges=%d d=%d c=%d\n", bundle.name.c_str(), bundle.n(),
              bundle.graph.num_edges(), bundle.feature_dim(), bundle.num_classes);
  if (cfg.normalize_features) l1_normalize_rows(bundle.features);

  const AttentionMode mode = cfg.resolve_mode(bundle.n());
  std::printf("attention mode: %s%s\n", mode == AttentionMode::kMasked ? "masked" : "dense",
              cfg.mode == "auto" ? " (auto)" : "");
  if (mode == AttentionMode::kDense && bundle.n() > 1024)
    std::fprintf(stderr,
                 "warning: dense mode materializes n x n attention per head and step; "
                 "n=%d may exhaust memory. Consider --mode masked.\n",
                 bundle.n());

  const DiffusionContext ctx = DiffusionContext::make(bundle.graph, mode, cfg.self_loops);
  const SparseMatrix xs = sparse_from_dense(bundle.features);
  FeatureRef feats;
  feats.sparse = &xs;
  const NetworkSpec spec = cfg.network_spec();
  const TrainConfig tc = cfg.train_config();

  std::vector<LabeledAggregate> cells;
  if (axis == nullptr) {
    AggregateResult agg = run_repeated(bundle, feats, ctx, spec, tc);
    print_aggregate("", agg);
    LabeledAggregate cell;
    cell.agg = std::move(agg);
    cells.push_back(std::move(cell));
  } else {
    const SweepAxis ax = sweep_axis_from_string(*axis);
    std::vector<SweepCell> swept = sweep(bundle, feats, ctx, spec, tc, ax, *values);
    for (SweepCell& c : swept) {
      std::printf("%s = %g\n", axis->c_str(), c.value);
      print_aggregate("  ", c.agg);
      LabeledAggregate cell;
      cell.has_axis = true;
      cell.axis = *axis;
      cell.value = c.value;
      cell.agg = std::move(c.agg);
      cells.push_back(std::move(cell));
    }
  }

  namespace fs = std::filesystem;
  fs::create_directories(io.out);
  const std::string results = (fs::path(io.out) / "results.json").string();
  const std::string agg_csv = (fs::path(io.out) / "aggregate.csv").string();
  const std::string curves = (fs::path(io.out) / "curves.csv").string();
  write_results_json(results, cells, cfg.to_kv());
  write_aggregate_csv(agg_csv, cells);
  write_curves_csv(curves, cells);
  std::printf("wrote %s, %s, %s\n", results.c_str(), agg_csv.c_str(), curves.c_str());
  return 0;
}

int run_selftest_cmd(const SelfTestOptions& opts) {
  std::printf("selftest seed: %llu\n", static_cast<unsigned long long>(opts.seed));
  const SelfTestReport report = run_selftest(opts);
  for (const CheckResult& c : report.checks)
    std::printf("[%s] %-24s metric %.3e  threshold %.0e  (%s)\n", c.pass ? " ok " : "FAIL",
                c.name.c_str(), c.metric, c.threshold, c.detail.c_str());
  if (!report.all_pass()) {
    std::fprintf(stderr, "selftest failed\n");
    return 3;
  }
  std::printf("all checks passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware graph attention: training, sweeps, and numeric self-tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cagat 0.1.0");

  ExperimentConfig cfg;
  IoOptions io;
  add_experiment_flags(&app, cfg);

  CLI::App* train = app.add_subcommand("train", "Train over seeds and aggregate accuracy");
  train->fallthrough();
  add_io_flags(train, io);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Train once per value of one axis");
  sweep_cmd->fallthrough();
  add_io_flags(sweep_cmd, io);
  std::string axis;
  std::vector<double> values;
  sweep_cmd->add_option("--axis", axis, "Swept hyperparameter: alpha, lambda, or xi")
      ->required()
      ->configurable(false);
  sweep_cmd->add_option("--values", values, "Comma-separated axis values")
      ->delimiter(',')
      ->required()
      ->configurable(false);

  CLI::App* selftest_cmd =
      app.add_subcommand("selftest", "Run oracle, fixed-point, and gradient checks");
  selftest_cmd->fallthrough();
  SelfTestOptions st;
  selftest_cmd->add_option("--seed", st.seed, "Seed for the random instances")
      ->capture_default_str()
      ->configurable(false);
  selftest_cmd->add_option("--instances", st.kronecker_instances, "Random diffusion instances")
      ->capture_default_str()
      ->configurable(false);
  selftest_cmd->add_flag("--corrupt-backward", st.corrupt_backward)->group("")->configurable(false);

  CLI::App* print_cfg = app.add_subcommand("print-config", "Print the effective config file");
  print_cfg->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(train)) return run_training(cfg, io, nullptr, nullptr);
    if (app.got_subcommand(sweep_cmd)) return run_training(cfg, io, &axis, &values);
    if (app.got_subcommand(selftest_cmd)) return run_selftest_cmd(st);
    if (app.got_subcommand(print_cfg)) {
      std::cout << app.config_to_str(true, true);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
