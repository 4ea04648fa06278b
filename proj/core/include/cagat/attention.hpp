// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "cagat/dense.hpp"
#include "cagat/graph.hpp"
#include "cagat/sparse.hpp"
#include "cagat/tape.hpp"

namespace cagat {

enum class AttentionMode { kDense, kMasked };

/// Diffusion hyperparameters. alpha = 0 is the explicit GAT-degenerate mode
/// (no diffusion); otherwise alpha must lie strictly inside (0, 1).
struct DiffusionConfig {
  double alpha = 0.4;
  double xi = 1e-3;
  int inner_steps = 2;  // T

  double mu() const;    // 1/alpha - 1, needs alpha > 0
  double beta() const;  // 2*mu*xi / (1-alpha)
  void validate() const;
};

/// gamma = 1/lambda - 1 (propagation weight of the NP objective).
double gamma_from_lambda(double lambda);

/// Everything derived from the graph that diffusion needs: the row-stochastic
/// abar in sparse form, plus mode-specific accelerators (dense copy or the
/// masked triple-product plan). Built once, shared by every layer and epoch.
struct DiffusionContext {
  AttentionMode mode = AttentionMode::kMasked;
  SparseMatrix abar;
  PatternPtr pattern;                             // abar's support
  std::shared_ptr<const TripleProductPlan> plan;  // masked mode
  DenseMatrix abar_dense;                         // dense mode
  DenseMatrix abar_dense_t;                       // dense mode

  int n() const { return abar.rows(); }
  static DiffusionContext make(const Graph& g, AttentionMode mode, bool self_loops = true);
};

/// n x n attention values, stored dense or on the self-looped support of A.
struct AttentionMatrix {
  AttentionMode mode = AttentionMode::kDense;
  DenseMatrix dense;
  SparseMatrix masked;

  int n() const { return mode == AttentionMode::kDense ? dense.rows : masked.rows(); }
  DenseMatrix to_dense() const { return mode == AttentionMode::kDense ? dense : masked.to_dense(); }
  static AttentionMatrix from_dense(DenseMatrix d);
  static AttentionMatrix from_sparse(SparseMatrix s);
};

// --- Gram helpers ------------------------------------------------------------

/// h * h^T for node-major h (n x k).
DenseMatrix gram_dense(const DenseMatrix& h);
/// Entries <h_i, h_j> on the pattern only.
SparseMatrix gram_masked(const DenseMatrix& h, const PatternPtr& pat);

// --- diffusion steps (pure; the trained path goes through the tape ops) ------

/// One power-iteration step: S <- alpha * abar S abar^T + (1-alpha) G.
/// Masked mode projects the triple product back onto the pattern.
AttentionMatrix tpg_step(const AttentionMatrix& s, const AttentionMatrix& g,
                         const DiffusionContext& ctx, double alpha);

/// T steps of tpg_step starting from S = G; T = 0 returns G.
AttentionMatrix tpg_diffuse(const AttentionMatrix& g, const DiffusionContext& ctx, double alpha,
                            int t_steps);

/// S <- alpha * abar S abar^T + (1-alpha) G + xi * Gram(hprime).
AttentionMatrix unified_step(const AttentionMatrix& s, const AttentionMatrix& g,
                             const DenseMatrix& hprime, const DiffusionContext& ctx, double alpha,
                             double xi);

// --- brute-force oracles and objective evaluators (test scale) ---------------

/// Column-major Kronecker-product iteration of the vectorized recursion
/// vec(S) <- alpha (abar (x) abar) vec(S) + (1-alpha) vec(G). n <= 64.
DenseMatrix vec_diffusion_oracle(const DenseMatrix& g, const DenseMatrix& abar, double alpha,
                                 int t_steps);

/// vec(S)^T (I - abar(x)abar) vec(S) + mu ||S - G||_F^2. n <= 64.
double objective_cagat(const DenseMatrix& s, const DenseMatrix& abar, const DenseMatrix& g,
                       double mu);

/// Tr(hprime^T (I - S) hprime) + gamma ||hprime - wh||_F^2 (node-major trace).
double objective_np(const DenseMatrix& hprime, const DenseMatrix& s, const DenseMatrix& wh,
                    double gamma);

/// R_CaGAT + beta * R_NP with mu, beta, gamma derived from (alpha, xi, lambda).
double objective_unified(const DenseMatrix& s, const DenseMatrix& hprime, const DenseMatrix& abar,
                         const DenseMatrix& g, const DenseMatrix& wh, double alpha, double xi,
                         double lambda);

/// Exact minimizer of the S block: solves (I - alpha*(abar(x)abar)) vec(S) =
/// (1-alpha) vec(G) + xi vec(gram). n <= 32 (dense n^2 x n^2 solve).
DenseMatrix solve_unified_stationary(const DenseMatrix& g, const DenseMatrix& abar,
                                     const DenseMatrix& gram, double alpha, double xi);

/// hprime = (1-lambda) (I - lambda S)^{-1} wh. Checks spectral radius of
/// lambda*S numerically before factorizing.
DenseMatrix np_closed_form(const DenseMatrix& s, const DenseMatrix& wh, double lambda);

/// T iterations of hprime <- lambda S hprime + (1-lambda) wh from hprime = wh.
DenseMatrix np_truncated(const DenseMatrix& s, const DenseMatrix& wh, double lambda, int t_steps);
DenseMatrix np_truncated(const SparseMatrix& s, const DenseMatrix& wh, double lambda, int t_steps);

// --- Kronecker utilities (shared with the oracles) ----------------------------

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);
/// Column-major vectorization as an n*m x 1 matrix, and its inverse.
DenseMatrix vec_col(const DenseMatrix& m);
DenseMatrix unvec_col(const DenseMatrix& v, int rows, int cols);

// --- attention (tape builders + pure wrappers) --------------------------------

/// Per-edge logits on pat from z = X W^T (n x dt) and theta (2*dt x 1):
/// LeakyReLU(theta_1^T z_i + theta_2^T z_j), slope 0.2.
Var attention_logits_tape(Tape& tape, Var z, Var theta, const PatternPtr& pat);

/// Row-softmax of the logits: the attention matrix G of a head.
Var gat_attention_tape(Tape& tape, Var z, Var theta, const PatternPtr& pat);

/// Pure evaluation on a throwaway tape (oracle-facing convenience).
SparseMatrix attention_logits(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& theta,
                              const Graph& g, bool self_loops = true);
SparseMatrix gat_attention(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& theta,
                           const Graph& g, bool self_loops = true);

}  // namespace cagat
