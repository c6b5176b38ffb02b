#include <benchmark/benchmark.h>

#include "loopexp/bp.hpp"
#include "loopexp/experiments.hpp"
#include "loopexp/graphs.hpp"
#include "loopexp/loopseries.hpp"

using namespace loopexp;

namespace {

Instance cycle_code(int n, double p = 0.45) {
  InstanceConfig config;
  config.n = n;
  config.p = p;
  return make_instance(config, 11, 0);
}

void BM_BpSweep(benchmark::State& state) {
  const Instance inst = cycle_code(static_cast<int>(state.range(0)));
  const VertexModel model(inst.graph, inst.spec);
  MessageSet eta = MessageSet::zeros(inst.graph);
  for (auto _ : state) {
    eta = bp_sweep(model, eta);
    benchmark::DoNotOptimize(eta.eta.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * inst.graph.num_edges());
}
BENCHMARK(BM_BpSweep)->RangeMultiplier(4)->Range(16, 4096);

void BM_SolveFixedPoint(benchmark::State& state) {
  const Instance inst = cycle_code(static_cast<int>(state.range(0)));
  const VertexModel model(inst.graph, inst.spec);
  for (auto _ : state) benchmark::DoNotOptimize(solve_fixed_point(model).residual);
}
BENCHMARK(BM_SolveFixedPoint)->RangeMultiplier(4)->Range(16, 1024);

void BM_ExactLogPartition(benchmark::State& state) {
  const Instance inst = cycle_code(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(exact_log_partition(inst.graph, inst.spec));
}
BENCHMARK(BM_ExactLogPartition)->DenseRange(8, 14, 2)->Unit(benchmark::kMillisecond);

void BM_ZCorrExact(benchmark::State& state) {
  const Instance inst = cycle_code(static_cast<int>(state.range(0)));
  const VertexModel model(inst.graph, inst.spec);
  const ActivityTable table(model, solve_fixed_point(model));
  for (auto _ : state) benchmark::DoNotOptimize(z_corr_exact(inst.graph, table).all_subsets);
}
BENCHMARK(BM_ZCorrExact)->DenseRange(8, 14, 2)->Unit(benchmark::kMillisecond);

void BM_EnumeratePolymers(benchmark::State& state) {
  const CheckGraph g = sample_regular_graph(64, 3, 5);
  const int cap = static_cast<int>(state.range(0));
  std::size_t count = 0;
  for (auto _ : state) {
    count = enumerate_polymers(g, cap).size();
    benchmark::DoNotOptimize(count);
  }
  state.counters["polymers"] = static_cast<double>(count);
}
BENCHMARK(BM_EnumeratePolymers)->DenseRange(6, 12, 2)->Unit(benchmark::kMillisecond);

void BM_MayerExpansion(benchmark::State& state) {
  InstanceConfig config;
  config.kind = FactorKind::HighTemperature;
  config.n = 12;
  config.coupling = 0.8;
  const Instance inst = make_instance(config, 70, 0);
  const VertexModel model(inst.graph, inst.spec);
  const ActivityTable table(model, solve_fixed_point(model));
  const PolymerCatalog catalog = enumerate_polymers(inst.graph, 6);
  const std::vector<double> acts = polymer_activities(table, catalog);
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mayer_expansion(catalog, acts, order).value());
}
BENCHMARK(BM_MayerExpansion)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_ExpansionExhaustive(benchmark::State& state) {
  const CheckGraph g = sample_regular_graph(static_cast<int>(state.range(0)), 3, 2);
  for (auto _ : state) benchmark::DoNotOptimize(check_edge_expansion(g, 0.54).expander);
}
BENCHMARK(BM_ExpansionExhaustive)->DenseRange(12, 20, 4)->Unit(benchmark::kMillisecond);

void BM_ExpansionSampled(benchmark::State& state) {
  const CheckGraph g = sample_regular_graph(static_cast<int>(state.range(0)), 3, 2);
  ExpansionOptions opts;
  opts.samples = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(check_edge_expansion(g, 0.54, opts).expander);
}
BENCHMARK(BM_ExpansionSampled)->RangeMultiplier(4)->Range(64, 256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
