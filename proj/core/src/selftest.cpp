// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/selftest.hpp"

#include <algorithm>
#include <cmath>

#include "cagat/attention.hpp"
#include "cagat/gradcheck.hpp"
#include "cagat/graph.hpp"
#include "cagat/model.hpp"
#include "cagat/train.hpp"

namespace cagat {

bool SelfTestReport::all_pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

Graph random_connected_graph(int n, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);  // ring backbone
  const int chords = n / 2 + 1;
  for (int k = 0; k < chords; ++k)
    edges.emplace_back(rng.uniform_int(n), rng.uniform_int(n));
  return build_graph(n, edges);
}

DenseMatrix random_dense(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

DenseMatrix random_row_stochastic(int n, Rng& rng) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      m(i, j) = rng.uniform(0.05, 1.0);
      s += m(i, j);
    }
    for (int j = 0; j < n; ++j) m(i, j) /= s;
  }
  return m;
}

CheckResult check_kronecker(Rng& rng, int instances) {
  const double alphas[] = {0.0, 0.4, 0.9};
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int n = 2 + i % 7;
    const int t_steps = i % 6;
    const double alpha = alphas[i % 3];
    Rng sub = rng.fork(i);
    DiffusionContext ctx = DiffusionContext::make(random_connected_graph(n, sub),
                                                  AttentionMode::kDense);
    const DenseMatrix g = random_row_stochastic(n, sub);
    const DenseMatrix fast =
        tpg_diffuse(AttentionMatrix::from_dense(g), ctx, alpha, t_steps).to_dense();
    const DenseMatrix oracle = vec_diffusion_oracle(g, ctx.abar_dense, alpha, t_steps);
    worst = std::max(worst, max_abs_diff(fast, oracle));
  }
  return {"kronecker-equivalence", worst < 1e-12, worst, 1e-12,
          std::to_string(instances) + " random instances, n<=8, T<=5"};
}

CheckResult check_fixed_point(Rng& rng) {
  const int n = 8;
  Rng sub = rng.fork(1001);
  DiffusionContext ctx = DiffusionContext::make(random_connected_graph(n, sub),
                                                AttentionMode::kDense);
  const double alpha = 0.4, xi = 1e-3;
  const DenseMatrix g = random_row_stochastic(n, sub);
  const DenseMatrix hp = random_dense(n, 3, sub);
  AttentionMatrix s = AttentionMatrix::from_dense(g);
  const AttentionMatrix gm = AttentionMatrix::from_dense(g);
  for (int it = 0; it < 100000; ++it) {
    AttentionMatrix next = unified_step(s, gm, hp, ctx, alpha, xi);
    const double diff = max_abs_diff(next.dense, s.dense);
    s = std::move(next);
    if (diff < 1e-15) break;
  }
  // residual of (I - alpha*AkronA) vec(S) = (1-alpha) vec(G) + xi vec(Gram)
  const DenseMatrix big_a = kron(ctx.abar_dense, ctx.abar_dense);
  const DenseMatrix vs = vec_col(s.dense);
  const DenseMatrix avs = multiply(big_a, vs);
  const DenseMatrix vg = vec_col(g);
  const DenseMatrix vgram = vec_col(gram_dense(hp));
  double resid = 0.0;
  for (int i = 0; i < vs.rows; ++i)
    resid = std::max(resid, std::abs(vs(i, 0) - alpha * avs(i, 0) - (1.0 - alpha) * vg(i, 0) -
                                     xi * vgram(i, 0)));
  return {"fixed-point-residual", resid < 1e-8, resid, 1e-8,
          "unified update iterated to convergence, n=8"};
}

CheckResult check_np_equivalence(Rng& rng) {
  Rng sub = rng.fork(2002);
  const int n = 12;
  const DenseMatrix s = random_row_stochastic(n, sub);
  const DenseMatrix wh = random_dense(n, 4, sub);
  const double diff =
      max_abs_diff(np_truncated(s, wh, 0.3, 200), np_closed_form(s, wh, 0.3));
  return {"np-truncated-vs-closed", diff < 1e-8, diff, 1e-8, "T=200, lambda=0.3, n=12"};
}

CheckResult check_contraction(Rng& rng) {
  Rng sub = rng.fork(3003);
  const int n = 7;
  const double alpha = 0.9;
  DiffusionContext ctx = DiffusionContext::make(random_connected_graph(n, sub),
                                                AttentionMode::kDense);
  const AttentionMatrix g = AttentionMatrix::from_dense(random_row_stochastic(n, sub));
  AttentionMatrix prev = g;
  AttentionMatrix cur = tpg_step(prev, g, ctx, alpha);
  double last_diff = frobenius_norm(add_scaled(cur.dense, 1.0, prev.dense, -1.0));
  double worst = -1.0;
  for (int t = 0; t < 30 && last_diff > 0.0; ++t) {
    AttentionMatrix next = tpg_step(cur, g, ctx, alpha);
    const double diff = frobenius_norm(add_scaled(next.dense, 1.0, cur.dense, -1.0));
    worst = std::max(worst, diff - alpha * last_diff);
    prev = std::move(cur);
    cur = std::move(next);
    last_diff = diff;
  }
  return {"tpg-contraction", worst <= 1e-12, worst, 1e-12,
          "successive Frobenius gaps shrink by at least alpha"};
}

CheckResult check_model_gradients(Rng& rng, AttentionMode mode, bool corrupt) {
  Rng sub = rng.fork(mode == AttentionMode::kMasked ? 4004 : 4005);
  const int n = 10, d = 5, classes = 3;
  const Graph graph = random_connected_graph(n, sub);
  const DiffusionContext ctx = DiffusionContext::make(graph, mode);
  const DenseMatrix x = random_dense(n, d, sub);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % classes;
  const std::vector<int> mask = {0, 2, 3, 5, 7, 9};

  NetworkSpec spec;
  spec.hidden_dim = 3;
  spec.hidden_heads = 2;
  spec.out_heads = 1;
  spec.diffusion = DiffusionConfig{0.4, 1e-3, 2};
  spec.lambda = 0.3;
  spec.outer_steps = 3;
  spec.dropout = 0.0;
  CaGATNetwork net = spec.build(d, classes);
  Rng init = sub.fork(1);
  net.init(init);

  auto f = [&](ParamStore& params, bool want_grad) {
    Tape::Options topts;
    topts.corrupt_backward = corrupt;
    Tape tape(topts);
    std::vector<Var> vars = params.leaves(tape, want_grad);
    Var logits = network_forward_tape(tape, net, vars,
                                      LayerInput::from_var(tape.dense_leaf(x, false)), ctx,
                                      ForwardOptions{});
    Var loss = tape.masked_cross_entropy(logits, labels, mask);
    if (want_grad) {
      tape.backward(loss);
      params.accumulate_grads(tape, vars);
    }
    return tape.scalar_value(loss);
  };
  const GradCheckReport rep = grad_check(net.params, f, 1e-5);
  const char* name =
      mode == AttentionMode::kMasked ? "model-gradcheck-masked" : "model-gradcheck-dense";
  return {name, rep.max_rel_err < 1e-4, rep.max_rel_err, 1e-4,
          "worst " + rep.worst + ", " + std::to_string(rep.checked) + " entries"};
}

}  // namespace

SelfTestReport run_selftest(const SelfTestOptions& opts) {
  Rng rng(opts.seed);
  SelfTestReport report;
  report.checks.push_back(check_kronecker(rng, opts.kronecker_instances));
  report.checks.push_back(check_fixed_point(rng));
  report.checks.push_back(check_np_equivalence(rng));
  report.checks.push_back(check_contraction(rng));
  report.checks.push_back(check_model_gradients(rng, AttentionMode::kMasked,
                                                opts.corrupt_backward));
  report.checks.push_back(check_model_gradients(rng, AttentionMode::kDense,
                                                opts.corrupt_backward));
  return report;
}

}  // namespace cagat
