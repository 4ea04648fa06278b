// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "cagat/attention.hpp"
#include "cagat/graph.hpp"
#include "cagat/params.hpp"
#include "cagat/tape.hpp"

namespace cagat {

enum class HeadMerge { kConcat, kAverage };
enum class Activation { kElu, kRelu, kNone };

struct LayerConfig {
  int in_dim = 0;
  int out_dim = 0;  // per-head width (dt)
  int heads = 1;
  HeadMerge merge = HeadMerge::kConcat;
  Activation activation = Activation::kElu;
  DiffusionConfig diffusion;
  double lambda = 0.3;
  int outer_steps = 3;  // K
  double dropout = 0.0;
  bool renormalize = false;  // optional row renormalization of S, default off

  int output_dim() const { return merge == HeadMerge::kConcat ? heads * out_dim : out_dim; }
  void validate() const;
};

/// Layer parameters live in the network's ParamStore under
/// "layer{i}.head{h}.W" (dt x d) and "layer{i}.head{h}.theta" (2*dt x 1);
/// registration order is layer-major, then head, W before theta.
struct CaGATNetwork {
  std::vector<LayerConfig> layers;
  int num_classes = 0;
  ParamStore params;

  void validate() const;
  /// Registers and Glorot-initializes every parameter. Call once.
  void init(Rng& rng);
};

/// Two-layer network with the usual citation-benchmark shape: hidden layer
/// concatenates `hidden_heads` heads of width `hidden_dim` under ELU; output
/// layer averages `out_heads` heads of width num_classes, no activation.
CaGATNetwork make_network(int in_dim, int hidden_dim, int num_classes, int hidden_heads,
                          int out_heads, const DiffusionConfig& diffusion, double lambda,
                          int outer_steps, double dropout, bool renormalize = false);

/// Layer/network input: either a dense tape node or constant sparse features
/// (first layer of bag-of-words datasets; no gradient flows into features).
struct LayerInput {
  Var var;                               // used when valid()
  const SparseMatrix* sparse = nullptr;  // used otherwise

  static LayerInput from_var(Var v) { return LayerInput{v, nullptr}; }
  static LayerInput from_sparse(const SparseMatrix* s) { return LayerInput{Var{}, s}; }
};

struct ForwardOptions {
  bool training = false;  // enables dropout
  Rng* dropout_rng = nullptr;
};

/// Algorithm-1 layer on the tape. head_params holds W, theta per head in
/// order. Returns the merged, activated features.
Var layer_forward_tape(Tape& tape, const LayerConfig& cfg, std::span<const Var> head_params,
                       const LayerInput& input, const DiffusionContext& ctx,
                       const ForwardOptions& opts);

/// Full network; param_vars must come from net.params.leaves(tape).
Var network_forward_tape(Tape& tape, const CaGATNetwork& net,
                         const std::vector<Var>& param_vars, const LayerInput& input,
                         const DiffusionContext& ctx, const ForwardOptions& opts);

/// Gradient-free evaluation pass; returns the logits.
DenseMatrix network_forward(const CaGATNetwork& net, const SparseMatrix* sparse_features,
                            const DenseMatrix* dense_features, const DiffusionContext& ctx);

// --- checkpointing -------------------------------------------------------

/// Flat little-endian f64 tensors after a one-line JSON index header.
void save_checkpoint(const std::string& path, const ParamStore& params);
/// Restores values into an already-registered store; names/shapes must match.
void load_checkpoint(const std::string& path, ParamStore& params);

}  // namespace cagat
