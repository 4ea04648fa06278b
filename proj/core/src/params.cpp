// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#include "cagat/params.hpp"

#include <cmath>

#include "cagat/errors.hpp"

namespace cagat {

ParamStore::Entry& ParamStore::add(const std::string& name, DenseMatrix init) {
  if (contains(name)) throw ConfigError("parameter registered twice: " + name);
  Entry e;
  e.name = name;
  e.grad = DenseMatrix(init.rows, init.cols);
  e.m = DenseMatrix(init.rows, init.cols);
  e.v = DenseMatrix(init.rows, init.cols);
  e.value = std::move(init);
  entries_.push_back(std::move(e));
  return entries_.back();
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
  for (Entry& e : entries_)
    if (e.name == name) return e;
  throw ConfigError("unknown parameter: " + name);
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return e;
  throw ConfigError("unknown parameter: " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.value.data.size();
  return n;
}

void ParamStore::zero_grad() {
  for (Entry& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

std::vector<Var> ParamStore::leaves(Tape& tape, bool requires_grad) const {
  std::vector<Var> vars;
  vars.reserve(entries_.size());
  for (const Entry& e : entries_) vars.push_back(tape.dense_leaf(e.value, requires_grad));
  return vars;
}

void ParamStore::accumulate_grads(const Tape& tape, const std::vector<Var>& vars) {
  if (vars.size() != entries_.size())
    throw ShapeError("accumulate_grads: handle count vs parameter count");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::vector<double>& g = tape.grad(vars[i]);
    if (g.empty()) continue;  // backward has not run; gradient is zero
    auto& dst = entries_[i].grad.data;
    if (g.size() != dst.size()) throw ShapeError("accumulate_grads: shape drift");
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  }
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count_));
  for (Entry& e : entries_) {
    auto& w = e.value.data;
    auto& g = e.grad.data;
    auto& m = e.m.data;
    auto& v = e.v.data;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w[k]);
      if (!std::isfinite(w[k])) throw NumericError("adam_step: parameter became non-finite");
    }
  }
}

void ParamStore::reset_optimizer() {
  step_count_ = 0;
  for (Entry& e : entries_) {
    std::fill(e.m.data.begin(), e.m.data.end(), 0.0);
    std::fill(e.v.data.begin(), e.v.data.end(), 0.0);
  }
}

std::vector<DenseMatrix> ParamStore::snapshot_values() const {
  std::vector<DenseMatrix> snap;
  snap.reserve(entries_.size());
  for (const Entry& e : entries_) snap.push_back(e.value);
  return snap;
}

void ParamStore::restore_values(const std::vector<DenseMatrix>& snap) {
  if (snap.size() != entries_.size()) throw ShapeError("restore_values: size mismatch");
  for (std::size_t i = 0; i < snap.size(); ++i) {
    if (!entries_[i].value.same_shape(snap[i])) throw ShapeError("restore_values: shape mismatch");
    entries_[i].value = snap[i];
  }
}

DenseMatrix glorot_init(int rows, int cols, Rng& rng) {
  DenseMatrix w(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& x : w.data) x = rng.uniform(-bound, bound);
  return w;
}

}  // namespace cagat
