// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/model.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "cagat/errors.hpp"

namespace cagat {

void LayerConfig::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ConfigError("layer dims must be positive");
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (outer_steps < 1) throw ConfigError("outer iterations K must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  diffusion.validate();
}

void CaGATNetwork::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (const LayerConfig& l : layers) l.validate();
  for (std::size_t i = 1; i < layers.size(); ++i)
    if (layers[i].in_dim != layers[i - 1].output_dim())
      throw ConfigError("layer " + std::to_string(i) + " input dim " +
                        std::to_string(layers[i].in_dim) + " != previous output dim " +
                        std::to_string(layers[i - 1].output_dim()));
  if (layers.back().output_dim() != num_classes)
    throw ConfigError("final layer output dim " + std::to_string(layers.back().output_dim()) +
                      " != class count " + std::to_string(num_classes));
}

void CaGATNetwork::init(Rng& rng) {
  validate();
  if (params.size() != 0) throw ConfigError("network already initialized");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerConfig& l = layers[i];
    for (int h = 0; h < l.heads; ++h) {
      const std::string prefix = "layer" + std::to_string(i) + ".head" + std::to_string(h) + ".";
      params.add(prefix + "W", glorot_init(l.out_dim, l.in_dim, rng));
      params.add(prefix + "theta", glorot_init(2 * l.out_dim, 1, rng));
    }
  }
}

CaGATNetwork make_network(int in_dim, int hidden_dim, int num_classes, int hidden_heads,
                          int out_heads, const DiffusionConfig& diffusion, double lambda,
                          int outer_steps, double dropout, bool renormalize) {
  CaGATNetwork net;
  net.num_classes = num_classes;
  LayerConfig hidden;
  hidden.in_dim = in_dim;
  hidden.out_dim = hidden_dim;
  hidden.heads = hidden_heads;
  hidden.merge = HeadMerge::kConcat;
  hidden.activation = Activation::kElu;
  hidden.diffusion = diffusion;
  hidden.lambda = lambda;
  hidden.outer_steps = outer_steps;
  hidden.dropout = dropout;
  hidden.renormalize = renormalize;
  LayerConfig out = hidden;
  out.in_dim = hidden.output_dim();
  out.out_dim = num_classes;
  out.heads = out_heads;
  out.merge = HeadMerge::kAverage;
  out.activation = Activation::kNone;
  net.layers = {hidden, out};
  return net;
}

namespace {

// lambda * base + (1 - lambda) * z
Var np_mix(Tape& tape, Var base, Var z, double lambda) {
  return tape.axpby(base, z, lambda, 1.0 - lambda);
}

// (1-alpha) G + xi Gram(H'): constant across the T inner steps of one outer
// round, so it is built once per round.
Var diffusion_drive(Tape& tape, Var g, Var hprime, const LayerConfig& cfg,
                    const DiffusionContext& ctx) {
  const double alpha = cfg.diffusion.alpha;
  const double xi = cfg.diffusion.xi;
  const double g_coeff = alpha == 0.0 ? 1.0 : 1.0 - alpha;
  if (xi == 0.0) return alpha == 0.0 ? g : tape.scale(g, g_coeff);
  const bool masked = ctx.mode == AttentionMode::kMasked;
  Var gram = masked ? tape.masked_gram(hprime, ctx.pattern)
                    : tape.matmul(hprime, tape.transpose(hprime));
  return tape.axpby(g, gram, g_coeff, xi);
}

// One unified power-iteration step of S on the tape.
Var unified_step_tape(Tape& tape, Var s, Var drive, const LayerConfig& cfg,
                      const DiffusionContext& ctx, Var abar_var, Var abar_t_var) {
  const double alpha = cfg.diffusion.alpha;
  Var next;
  if (alpha == 0.0) {
    next = drive;
  } else {
    const bool masked = ctx.mode == AttentionMode::kMasked;
    Var triple = masked ? tape.masked_triple(s, *ctx.plan)
                        : tape.matmul(tape.matmul(abar_var, s), abar_t_var);
    next = tape.axpby(triple, drive, alpha, 1.0);
  }
  if (cfg.renormalize) next = tape.row_normalize(next);
  return next;
}

}  // namespace

Var layer_forward_tape(Tape& tape, const LayerConfig& cfg, std::span<const Var> head_params,
                       const LayerInput& input, const DiffusionContext& ctx,
                       const ForwardOptions& opts) {
  cfg.validate();
  if (static_cast<int>(head_params.size()) != 2 * cfg.heads)
    throw ShapeError("layer_forward: expected W,theta per head");
  const bool drop = opts.training && cfg.dropout > 0.0;
  if (drop && opts.dropout_rng == nullptr)
    throw ConfigError("layer_forward: training with dropout requires an RNG");

  // Input dropout, shared across heads (constant sparse features are dropped
  // out-of-tape since no gradient flows into them).
  Var xvar = input.var;
  SparseMatrix xsp;
  const SparseMatrix* xsparse = input.sparse;
  if (xvar.valid()) {
    if (tape.cols(xvar) != cfg.in_dim) throw ShapeError("layer_forward: input dim mismatch");
    if (drop) xvar = tape.dropout(xvar, cfg.dropout, *opts.dropout_rng, true);
  } else {
    if (xsparse == nullptr) throw ShapeError("layer_forward: no input");
    if (xsparse->cols() != cfg.in_dim) throw ShapeError("layer_forward: input dim mismatch");
    if (drop) {
      xsp = *xsparse;
      const double keep = 1.0 - cfg.dropout;
      for (double& v : xsp.values)
        v = opts.dropout_rng->uniform() < keep ? v / keep : 0.0;
      xsparse = &xsp;
    }
  }

  const bool masked = ctx.mode == AttentionMode::kMasked;
  Var abar_var, abar_t_var;
  if (!masked) {
    abar_var = tape.dense_leaf(ctx.abar_dense, false);
    abar_t_var = tape.dense_leaf(ctx.abar_dense_t, false);
  }

  std::vector<Var> merged;
  merged.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    Var w = head_params[2 * h];
    Var theta = head_params[2 * h + 1];
    if (tape.rows(w) != cfg.out_dim || tape.cols(w) != cfg.in_dim)
      throw ShapeError("layer_forward: W shape mismatch at head " + std::to_string(h));
    Var z = xvar.valid() ? tape.matmul(xvar, tape.transpose(w))
                         : tape.spmm_const(*xsparse, tape.transpose(w));
    Var g = gat_attention_tape(tape, z, theta, ctx.pattern);
    if (drop) g = tape.dropout(g, cfg.dropout, *opts.dropout_rng, true);

    // Algorithm 1: H' from G first, then K rounds of T diffusion steps each
    // followed by a one-step NP refresh from the transformed features.
    Var s = masked ? g : tape.to_dense(g);
    Var g_diff = s;  // the (1-alpha) target in the same storage mode as S
    Var hprime = np_mix(tape, tape.spmm(g, z), z, cfg.lambda);
    const bool xi_zero = cfg.diffusion.xi == 0.0;
    Var const_drive;  // without the Gram term the drive is round-invariant
    for (int k = 0; k < cfg.outer_steps; ++k) {
      if (cfg.diffusion.inner_steps > 0) {
        Var drive = xi_zero ? (const_drive.valid()
                                   ? const_drive
                                   : (const_drive =
                                          diffusion_drive(tape, g_diff, hprime, cfg, ctx)))
                            : diffusion_drive(tape, g_diff, hprime, cfg, ctx);
        for (int t = 0; t < cfg.diffusion.inner_steps; ++t)
          s = unified_step_tape(tape, s, drive, cfg, ctx, abar_var, abar_t_var);
      }
      Var agg = masked ? tape.spmm(s, z) : tape.matmul(s, z);
      hprime = np_mix(tape, agg, z, cfg.lambda);
    }
    merged.push_back(hprime);
  }

  Var out = cfg.merge == HeadMerge::kConcat
                ? tape.concat_cols(std::span<const Var>(merged))
                : (merged.size() == 1 ? merged[0]
                                      : tape.average(std::span<const Var>(merged)));
  switch (cfg.activation) {
    case Activation::kElu:
      return tape.unary(out, Unary::kElu);
    case Activation::kRelu:
      return tape.unary(out, Unary::kRelu);
    case Activation::kNone:
      return out;
  }
  throw ConfigError("layer_forward: unknown activation");
}

Var network_forward_tape(Tape& tape, const CaGATNetwork& net,
                         const std::vector<Var>& param_vars, const LayerInput& input,
                         const DiffusionContext& ctx, const ForwardOptions& opts) {
  net.validate();
  std::size_t expected = 0;
  for (const LayerConfig& l : net.layers) expected += 2 * static_cast<std::size_t>(l.heads);
  if (param_vars.size() != expected)
    throw ShapeError("network_forward: parameter handle count mismatch");

  LayerInput cur = input;
  std::size_t idx = 0;
  Var h;
  for (const LayerConfig& l : net.layers) {
    std::span<const Var> head_params(param_vars.data() + idx, 2 * static_cast<std::size_t>(l.heads));
    h = layer_forward_tape(tape, l, head_params, cur, ctx, opts);
    cur = LayerInput::from_var(h);
    idx += 2 * static_cast<std::size_t>(l.heads);
  }
  return h;
}

DenseMatrix network_forward(const CaGATNetwork& net, const SparseMatrix* sparse_features,
                            const DenseMatrix* dense_features, const DiffusionContext& ctx) {
  if ((sparse_features == nullptr) == (dense_features == nullptr))
    throw ShapeError("network_forward: provide exactly one of sparse/dense features");
  Tape tape;
  std::vector<Var> vars = net.params.leaves(tape, /*requires_grad=*/false);
  LayerInput input = sparse_features
                         ? LayerInput::from_sparse(sparse_features)
                         : LayerInput::from_var(tape.dense_leaf(*dense_features, false));
  Var logits = network_forward_tape(tape, net, vars, input, ctx, ForwardOptions{});
  return tape.dense_value(logits);
}

// --- checkpointing -------------------------------------------------------

void save_checkpoint(const std::string& path, const ParamStore& params) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint format assumes a little-endian host");
  nlohmann::json index;
  index["format"] = "cagat-checkpoint-v1";
  index["dtype"] = "f64";
  index["endianness"] = "little";
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params[i];
    tensors.push_back({{"name", e.name},
                       {"rows", e.value.rows},
                       {"cols", e.value.cols},
                       {"offset", offset}});
    offset += e.value.data.size() * sizeof(double);
  }
  index["tensors"] = std::move(tensors);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint for writing: " + tmp);
    out << index.dump() << '\n';
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& d = params[i].value.data;
      out.write(reinterpret_cast<const char*>(d.data()),
                static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw DataError("short write on checkpoint: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void load_checkpoint(const std::string& path, ParamStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError("truncated checkpoint header: " + path);
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint header: " + std::string(e.what()));
  }
  if (index.value("format", "") != "cagat-checkpoint-v1" || index.value("dtype", "") != "f64" ||
      index.value("endianness", "") != "little")
    throw DataError("unsupported checkpoint format in " + path);
  const auto& tensors = index.at("tensors");
  if (tensors.size() != params.size())
    throw DataError("checkpoint tensor count " + std::to_string(tensors.size()) +
                    " != parameter count " + std::to_string(params.size()));
  const std::streampos data_start = in.tellg();
  for (const auto& t : tensors) {
    const std::string name = t.at("name").get<std::string>();
    auto& e = params.at(name);
    const int rows = t.at("rows").get<int>();
    const int cols = t.at("cols").get<int>();
    if (rows != e.value.rows || cols != e.value.cols)
      throw DataError("checkpoint shape mismatch for " + name);
    in.seekg(data_start + static_cast<std::streamoff>(t.at("offset").get<std::size_t>()));
    in.read(reinterpret_cast<char*>(e.value.data.data()),
            static_cast<std::streamsize>(e.value.data.size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint data for " + name);
  }
}

}  // namespace cagat
