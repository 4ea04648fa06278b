// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the kernels that dominate a training epoch at citation
// scale: the masked triple product, masked spmm, neighborhood softmax, one
// layer forward, and a full train step (forward + backward + Adam).

#include <benchmark/benchmark.h>

#include "cagat/attention.hpp"
#include "cagat/graph.hpp"
#include "cagat/model.hpp"
#include "cagat/params.hpp"
#include "cagat/sparse.hpp"
#include "cagat/synthetic.hpp"
#include "cagat/tape.hpp"
#include "cagat/train.hpp"

namespace {

using namespace cagat;

struct Fixture {
  DatasetBundle bundle;
  DiffusionContext ctx;
  SparseMatrix xs;
  CaGATNetwork net;
  std::vector<int> mask;

  Fixture()
      : bundle(make_bundle()),
        ctx(DiffusionContext::make(bundle.graph, AttentionMode::kMasked)),
        xs(sparse_from_dense(bundle.features)),
        net(make_net(bundle)) {
    for (int i = 0; i < 140; ++i) mask.push_back(i * 17 % bundle.n());
    std::sort(mask.begin(), mask.end());
    mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
  }

  static DatasetBundle make_bundle() {
    Rng rng(99);
    return make_synthetic(synthetic_preset("cora"), rng);
  }

  static CaGATNetwork make_net(const DatasetBundle& b) {
    NetworkSpec spec;
    spec.dropout = 0.0;
    CaGATNetwork net = spec.build(b.feature_dim(), b.num_classes);
    Rng rng(3);
    net.init(rng);
    return net;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_TripleApply(benchmark::State& state) {
  Fixture& f = fixture();
  const TripleProductPlan& plan = *f.ctx.plan;
  std::vector<double> s(f.ctx.pattern->nnz(), 0.5), out(f.ctx.pattern->nnz());
  for (auto _ : state) {
    plan.apply(s.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["coeffs"] = static_cast<double>(plan.triple_count());
}
BENCHMARK(BM_TripleApply);

void BM_SpmmMasked(benchmark::State& state) {
  Fixture& f = fixture();
  const int dim = static_cast<int>(state.range(0));
  SparseMatrix s(f.ctx.pattern, 0.3);
  DenseMatrix z(f.bundle.n(), dim);
  for (int i = 0; i < z.rows * z.cols; ++i) z.data[i] = 0.01 * (i % 97);
  for (auto _ : state) {
    DenseMatrix out = spmm_ref(s, z);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(BM_SpmmMasked)->Arg(8)->Arg(64);

void BM_SegmentSoftmax(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    Tape tape;
    Var logits = tape.pattern_leaf(SparseMatrix(f.ctx.pattern, 0.1), false);
    Var g = tape.segment_softmax(logits);
    benchmark::DoNotOptimize(tape.value(g).data());
  }
}
BENCHMARK(BM_SegmentSoftmax);

void BM_SparseFeatureProjection(benchmark::State& state) {
  Fixture& f = fixture();
  DenseMatrix wt(f.bundle.feature_dim(), 8);
  for (int i = 0; i < wt.rows * wt.cols; ++i) wt.data[i] = 0.001 * (i % 31);
  for (auto _ : state) {
    Tape tape;
    Var z = tape.spmm_const(f.xs, tape.dense_leaf(wt, false));
    benchmark::DoNotOptimize(tape.value(z).data());
  }
}
BENCHMARK(BM_SparseFeatureProjection);

void BM_LayerForward(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    Tape tape;
    std::vector<Var> vars = f.net.params.leaves(tape, false);
    Var out = network_forward_tape(tape, f.net, vars, LayerInput::from_sparse(&f.xs), f.ctx,
                                   ForwardOptions{});
    benchmark::DoNotOptimize(tape.value(out).data());
  }
}
BENCHMARK(BM_LayerForward);

void BM_TrainStep(benchmark::State& state) {
  Fixture& f = fixture();
  AdamConfig adam;
  for (auto _ : state) {
    Tape tape;
    std::vector<Var> vars = f.net.params.leaves(tape, true);
    Var out = network_forward_tape(tape, f.net, vars, LayerInput::from_sparse(&f.xs), f.ctx,
                                   ForwardOptions{});
    Var loss = tape.masked_cross_entropy(out, f.bundle.labels, f.mask);
    tape.backward(loss);
    f.net.params.zero_grad();
    f.net.params.accumulate_grads(tape, vars);
    f.net.params.adam_step(adam);
    benchmark::DoNotOptimize(f.net.params);
  }
}
BENCHMARK(BM_TrainStep);

void BM_AdamStep(benchmark::State& state) {
  Fixture& f = fixture();
  AdamConfig adam;
  for (auto _ : state) {
    f.net.params.adam_step(adam);
    benchmark::DoNotOptimize(f.net.params);
  }
}
BENCHMARK(BM_AdamStep);

}  // namespace

BENCHMARK_MAIN();
