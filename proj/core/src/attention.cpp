// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/attention.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cagat/errors.hpp"

namespace cagat {

double DiffusionConfig::mu() const {
  if (alpha <= 0.0) throw DomainError("mu is undefined in the GAT-degenerate mode (alpha = 0)");
  return 1.0 / alpha - 1.0;
}

double DiffusionConfig::beta() const { return 2.0 * mu() * xi / (1.0 - alpha); }

void DiffusionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie in [0, 1); got " + std::to_string(alpha));
  if (xi < 0.0) throw ConfigError("xi must be nonnegative");
  if (inner_steps < 0) throw ConfigError("inner diffusion steps T must be >= 0");
}

double gamma_from_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("lambda must lie in (0, 1); got " + std::to_string(lambda));
  return 1.0 / lambda - 1.0;
}

DiffusionContext DiffusionContext::make(const Graph& g, AttentionMode mode, bool self_loops) {
  DiffusionContext ctx;
  ctx.mode = mode;
  ctx.abar = diffusion_matrix(g, self_loops);
  ctx.pattern = ctx.abar.pattern;
  if (mode == AttentionMode::kMasked) {
    ctx.plan = std::make_shared<TripleProductPlan>(TripleProductPlan::build(ctx.abar));
  } else {
    ctx.abar_dense = ctx.abar.to_dense();
    ctx.abar_dense_t = transposed(ctx.abar_dense);
  }
  return ctx;
}

AttentionMatrix AttentionMatrix::from_dense(DenseMatrix d) {
  AttentionMatrix m;
  m.mode = AttentionMode::kDense;
  m.dense = std::move(d);
  return m;
}

AttentionMatrix AttentionMatrix::from_sparse(SparseMatrix s) {
  AttentionMatrix m;
  m.mode = AttentionMode::kMasked;
  m.masked = std::move(s);
  return m;
}

DenseMatrix gram_dense(const DenseMatrix& h) { return multiply(h, transposed(h)); }

SparseMatrix gram_masked(const DenseMatrix& h, const PatternPtr& pat) {
  if (h.rows != pat->rows || pat->rows != pat->cols)
    throw ShapeError("gram_masked: rows vs pattern mismatch");
  SparseMatrix out(pat);
  const int k = h.cols;
  for (int i = 0; i < pat->rows; ++i) {
    const double* hi = &h.data[static_cast<std::size_t>(i) * k];
    for (int e = pat->row_begin(i); e < pat->row_end(i); ++e) {
      const double* hj = &h.data[static_cast<std::size_t>(pat->cols_idx[e]) * k];
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += hi[t] * hj[t];
      out.values[e] = acc;
    }
  }
  return out;
}

namespace {

void require_mode(const AttentionMatrix& m, const DiffusionContext& ctx, const char* op) {
  if (m.mode != ctx.mode) throw ShapeError(std::string(op) + ": dense/masked mode mismatch");
  if (m.mode == AttentionMode::kMasked && m.masked.pattern != ctx.pattern)
    throw ShapeError(std::string(op) + ": operand lives on a different pattern");
}

}  // namespace

AttentionMatrix tpg_step(const AttentionMatrix& s, const AttentionMatrix& g,
                         const DiffusionContext& ctx, double alpha) {
  require_mode(s, ctx, "tpg_step");
  require_mode(g, ctx, "tpg_step");
  if (ctx.mode == AttentionMode::kDense) {
    DenseMatrix triple = multiply(multiply(ctx.abar_dense, s.dense), ctx.abar_dense_t);
    return AttentionMatrix::from_dense(add_scaled(triple, alpha, g.dense, 1.0 - alpha));
  }
  SparseMatrix out(ctx.pattern);
  ctx.plan->apply(s.masked.values.data(), out.values.data());
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] = alpha * out.values[k] + (1.0 - alpha) * g.masked.values[k];
  return AttentionMatrix::from_sparse(std::move(out));
}

AttentionMatrix tpg_diffuse(const AttentionMatrix& g, const DiffusionContext& ctx, double alpha,
                            int t_steps) {
  if (t_steps < 0) throw ConfigError("tpg_diffuse: T must be >= 0");
  AttentionMatrix s = g;
  for (int t = 0; t < t_steps; ++t) s = tpg_step(s, g, ctx, alpha);
  return s;
}

AttentionMatrix unified_step(const AttentionMatrix& s, const AttentionMatrix& g,
                             const DenseMatrix& hprime, const DiffusionContext& ctx, double alpha,
                             double xi) {
  AttentionMatrix out = tpg_step(s, g, ctx, alpha);
  if (xi == 0.0) return out;
  if (ctx.mode == AttentionMode::kDense) {
    out.dense = add_scaled(out.dense, 1.0, gram_dense(hprime), xi);
  } else {
    SparseMatrix gm = gram_masked(hprime, ctx.pattern);
    for (std::size_t k = 0; k < out.masked.values.size(); ++k)
      out.masked.values[k] += xi * gm.values[k];
  }
  return out;
}

namespace {
void check_oracle_size(int n, int limit, const char* op) {
  if (n > limit)
    throw DomainError(std::string(op) + ": test-only oracle, n must be <= " +
                      std::to_string(limit));
}
}  // namespace

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows * b.rows, a.cols * b.cols);
  for (int i1 = 0; i1 < a.rows; ++i1)
    for (int j1 = 0; j1 < a.cols; ++j1) {
      const double av = a(i1, j1);
      if (av == 0.0) continue;
      for (int i2 = 0; i2 < b.rows; ++i2)
        for (int j2 = 0; j2 < b.cols; ++j2)
          out(i1 * b.rows + i2, j1 * b.cols + j2) = av * b(i2, j2);
    }
  return out;
}

DenseMatrix vec_col(const DenseMatrix& m) {
  DenseMatrix v(m.rows * m.cols, 1);
  for (int j = 0; j < m.cols; ++j)
    for (int i = 0; i < m.rows; ++i) v(j * m.rows + i, 0) = m(i, j);
  return v;
}

DenseMatrix unvec_col(const DenseMatrix& v, int rows, int cols) {
  if (v.cols != 1 || v.rows != rows * cols) throw ShapeError("unvec_col: bad vector length");
  DenseMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = v(j * rows + i, 0);
  return m;
}

DenseMatrix vec_diffusion_oracle(const DenseMatrix& g, const DenseMatrix& abar, double alpha,
                                 int t_steps) {
  check_oracle_size(g.rows, 64, "vec_diffusion_oracle");
  if (t_steps < 0) throw ConfigError("vec_diffusion_oracle: T must be >= 0");
  const DenseMatrix big_a = kron(abar, abar);
  const DenseMatrix vg = vec_col(g);
  DenseMatrix vs = vg;
  for (int t = 0; t < t_steps; ++t)
    vs = add_scaled(multiply(big_a, vs), alpha, vg, 1.0 - alpha);
  return unvec_col(vs, g.rows, g.cols);
}

double objective_cagat(const DenseMatrix& s, const DenseMatrix& abar, const DenseMatrix& g,
                       double mu) {
  check_oracle_size(s.rows, 64, "objective_cagat");
  const DenseMatrix big_a = kron(abar, abar);
  const DenseMatrix vs = vec_col(s);
  const DenseMatrix avs = multiply(big_a, vs);
  double quad = 0.0;
  for (int i = 0; i < vs.rows; ++i) quad += vs(i, 0) * (vs(i, 0) - avs(i, 0));
  const DenseMatrix diff = add_scaled(s, 1.0, g, -1.0);
  const double fro = frobenius_norm(diff);
  return quad + mu * fro * fro;
}

double objective_np(const DenseMatrix& hprime, const DenseMatrix& s, const DenseMatrix& wh,
                    double gamma) {
  if (hprime.rows != s.rows || s.rows != s.cols || !hprime.same_shape(wh))
    throw ShapeError("objective_np: nonconformable inputs");
  // Tr(H'^T (I - S) H') = sum_ij (I - S)_ij <h'_i, h'_j>
  const DenseMatrix gram = gram_dense(hprime);
  double quad = 0.0;
  for (int i = 0; i < s.rows; ++i)
    for (int j = 0; j < s.cols; ++j)
      quad += ((i == j ? 1.0 : 0.0) - s(i, j)) * gram(i, j);
  const double fro = frobenius_norm(add_scaled(hprime, 1.0, wh, -1.0));
  return quad + gamma * fro * fro;
}

double objective_unified(const DenseMatrix& s, const DenseMatrix& hprime, const DenseMatrix& abar,
                         const DenseMatrix& g, const DenseMatrix& wh, double alpha, double xi,
                         double lambda) {
  DiffusionConfig cfg;
  cfg.alpha = alpha;
  cfg.xi = xi;
  return objective_cagat(s, abar, g, cfg.mu()) +
         cfg.beta() * objective_np(hprime, s, wh, gamma_from_lambda(lambda));
}

DenseMatrix solve_unified_stationary(const DenseMatrix& g, const DenseMatrix& abar,
                                     const DenseMatrix& gram, double alpha, double xi) {
  check_oracle_size(g.rows, 32, "solve_unified_stationary");
  const int n = g.rows;
  DenseMatrix lhs = kron(abar, abar);
  for (double& v : lhs.data) v = -alpha * v;
  for (int i = 0; i < n * n; ++i) lhs(i, i) += 1.0;
  const DenseMatrix rhs = add_scaled(vec_col(g), 1.0 - alpha, vec_col(gram), xi);
  return unvec_col(solve_dense(std::move(lhs), rhs), n, n);
}

DenseMatrix np_closed_form(const DenseMatrix& s, const DenseMatrix& wh, double lambda) {
  if (s.rows != s.cols || s.rows != wh.rows) throw ShapeError("np_closed_form: nonconformable");
  if (lambda * spectral_radius_estimate(s) >= 1.0)
    throw DomainError("np_closed_form: spectral radius of lambda*S must be below 1");
  DenseMatrix lhs(s.rows, s.cols);
  for (int i = 0; i < s.rows; ++i)
    for (int j = 0; j < s.cols; ++j) lhs(i, j) = (i == j ? 1.0 : 0.0) - lambda * s(i, j);
  return scaled(solve_dense(std::move(lhs), wh), 1.0 - lambda);
}

DenseMatrix np_truncated(const DenseMatrix& s, const DenseMatrix& wh, double lambda, int t_steps) {
  if (t_steps < 1) throw ConfigError("np_truncated: T must be >= 1");
  DenseMatrix h = wh;
  for (int t = 0; t < t_steps; ++t)
    h = add_scaled(multiply(s, h), lambda, wh, 1.0 - lambda);
  return h;
}

DenseMatrix np_truncated(const SparseMatrix& s, const DenseMatrix& wh, double lambda,
                         int t_steps) {
  if (t_steps < 1) throw ConfigError("np_truncated: T must be >= 1");
  DenseMatrix h = wh;
  for (int t = 0; t < t_steps; ++t)
    h = add_scaled(spmm_ref(s, h), lambda, wh, 1.0 - lambda);
  return h;
}

Var attention_logits_tape(Tape& tape, Var z, Var theta, const PatternPtr& pat) {
  const int dt = tape.cols(z);
  if (tape.rows(theta) != 2 * dt || tape.cols(theta) != 1)
    throw ShapeError("attention_logits: theta must be 2*dt x 1 with dt = cols of z");
  Var th_src = tape.slice_rows(theta, 0, dt);
  Var th_dst = tape.slice_rows(theta, dt, 2 * dt);
  Var a = tape.matmul(z, th_src);
  Var b = tape.matmul(z, th_dst);
  return tape.unary(tape.gather_pair_sum(a, b, pat), Unary::kLeakyRelu, 0.2);
}

Var gat_attention_tape(Tape& tape, Var z, Var theta, const PatternPtr& pat) {
  return tape.segment_softmax(attention_logits_tape(tape, z, theta, pat));
}

namespace {
SparseMatrix eval_attention(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& theta,
                            const Graph& g, bool self_loops, bool softmax) {
  const PatternPtr pat = binary_adjacency(g, self_loops).pattern;
  Tape tape;
  Var z = tape.matmul(tape.dense_leaf(x, false), tape.transpose(tape.dense_leaf(w, false)));
  Var th = tape.dense_leaf(theta, false);
  Var out = softmax ? gat_attention_tape(tape, z, th, pat)
                    : attention_logits_tape(tape, z, th, pat);
  return tape.sparse_value(out);
}
}  // namespace

SparseMatrix attention_logits(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& theta,
                              const Graph& g, bool self_loops) {
  return eval_attention(x, w, theta, g, self_loops, /*softmax=*/false);
}

SparseMatrix gat_attention(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& theta,
                           const Graph& g, bool self_loops) {
  return eval_attention(x, w, theta, g, self_loops, /*softmax=*/true);
}

}  // namespace cagat
