// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/config.hpp"

#include "cagat/data_io.hpp"
#include "cagat/errors.hpp"

namespace cagat {

void ExperimentConfig::validate() const {
  if (hidden < 1 || heads < 1 || out_heads < 1)
    throw ConfigError("hidden width and head counts must be >= 1");
  if (outer_steps < 1) throw ConfigError("K must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  DiffusionConfig d{alpha, xi, inner_steps};
  d.validate();
  if (mode != "auto" && mode != "dense" && mode != "masked")
    throw ConfigError("mode must be auto, dense, or masked; got '" + mode + "'");
  if (num_seeds < 1) throw ConfigError("need at least one seed");
  train_config().validate();
}

NetworkSpec ExperimentConfig::network_spec() const {
  NetworkSpec s;
  s.hidden_dim = hidden;
  s.hidden_heads = heads;
  s.out_heads = out_heads;
  s.diffusion = DiffusionConfig{alpha, xi, inner_steps};
  s.lambda = lambda;
  s.outer_steps = outer_steps;
  s.dropout = dropout;
  s.renormalize = renormalize;
  return s;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.lr = lr;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.weight_decay = weight_decay;
  t.labels_per_class = labels_per_class;
  t.val_per_class = val_per_class;
  t.seeds.clear();
  for (int i = 0; i < num_seeds; ++i) t.seeds.push_back(seed_base + static_cast<std::uint64_t>(i));
  t.jobs = jobs;
  return t;
}

AttentionMode ExperimentConfig::resolve_mode(int n) const {
  if (mode == "dense") return AttentionMode::kDense;
  if (mode == "masked") return AttentionMode::kMasked;
  return n <= 3000 ? AttentionMode::kDense : AttentionMode::kMasked;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_kv() const {
  auto num = [](double v) { return format_double(v); };
  return {
      {"alpha", num(alpha)},
      {"xi", num(xi)},
      {"lambda", num(lambda)},
      {"K", std::to_string(outer_steps)},
      {"T", std::to_string(inner_steps)},
      {"hidden", std::to_string(hidden)},
      {"heads", std::to_string(heads)},
      {"out_heads", std::to_string(out_heads)},
      {"dropout", num(dropout)},
      {"renormalize", renormalize ? "true" : "false"},
      {"lr", num(lr)},
      {"weight_decay", num(weight_decay)},
      {"patience", std::to_string(patience)},
      {"max_epochs", std::to_string(max_epochs)},
      {"labels_per_class", std::to_string(labels_per_class)},
      {"val_per_class", std::to_string(val_per_class)},
      {"seeds", std::to_string(num_seeds)},
      {"seed_base", std::to_string(seed_base)},
      {"jobs", std::to_string(jobs)},
      {"mode", mode},
      {"self_loops", self_loops ? "true" : "false"},
      {"normalize_features", normalize_features ? "true" : "false"},
  };
}

}  // namespace cagat
