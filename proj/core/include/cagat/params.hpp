// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cagat/dense.hpp"
#include "cagat/rng.hpp"
#include "cagat/tape.hpp"

namespace cagat {

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled (applied to the weights, not the gradient)
};

/// Named trainable matrices with Adam state. Insertion order is the canonical
/// order everywhere (gradient vectors, checkpoints, finite differencing).
class ParamStore {
 public:
  struct Entry {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;
    DenseMatrix m;  // Adam first moment
    DenseMatrix v;  // Adam second moment
  };

  /// Registers a parameter; name must be unique.
  Entry& add(const std::string& name, DenseMatrix init);
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  Entry& operator[](std::size_t i) { return entries_[i]; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

  std::size_t scalar_count() const;
  void zero_grad();

  /// Records every parameter on the tape and returns the handles (same order).
  /// Pass requires_grad = false for evaluation-only passes.
  std::vector<Var> leaves(Tape& tape, bool requires_grad = true) const;
  /// Adds the tape gradients of `vars` (from leaves()) into the stored grads.
  void accumulate_grads(const Tape& tape, const std::vector<Var>& vars);

  /// One Adam step with bias correction; increments the step counter.
  void adam_step(const AdamConfig& cfg);
  void reset_optimizer();
  long step_count() const { return step_count_; }

  /// Flat copies in insertion order (used for checkpoint best-epoch restore).
  std::vector<DenseMatrix> snapshot_values() const;
  void restore_values(const std::vector<DenseMatrix>& snap);

 private:
  std::vector<Entry> entries_;
  long step_count_ = 0;
};

/// Glorot/Xavier uniform: +-sqrt(6 / (fan_in + fan_out)) with fan counts
/// taken from the matrix shape.
DenseMatrix glorot_init(int rows, int cols, Rng& rng);

}  // namespace cagat
