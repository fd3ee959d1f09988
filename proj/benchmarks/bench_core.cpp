#include <benchmark/benchmark.h>

#include "flwire/analysis/convergence.hpp"
#include "flwire/harness/config.hpp"
#include "flwire/harness/experiment.hpp"
#include "flwire/opt/allocation.hpp"
#include "flwire/opt/assignment.hpp"
#include "flwire/phy/link.hpp"

using namespace flwire;

namespace {

harness::ExperimentConfig sized(int users, int rbs) {
  auto c = harness::default_config();
  c.users.count = users;
  c.network.rb_count = rbs;
  return c;
}

}  // namespace

static void BM_SolveAssignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Grid<double> cost(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(opt::solve_assignment(cost));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveAssignment)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNCubed);

static void BM_PacketErrorRate(benchmark::State& state) {
  const auto c = harness::default_config();
  const auto topo = harness::build_topology(c, 7);
  const auto fexp = phy::FadingExpectation::quadrature(static_cast<int>(state.range(0)));
  double p = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(phy::packet_error_rate(topo.users[3], 2, p, topo.params, fexp));
    p = p < 1e-2 ? p * 1.01 : 1e-3;
  }
}
BENCHMARK(BM_PacketErrorRate)->Arg(32)->Arg(64)->Arg(128);

static void BM_OptimalPower(benchmark::State& state) {
  const auto topo = harness::build_topology(harness::default_config(), 7);
  for (auto _ : state) benchmark::DoNotOptimize(opt::optimal_power(topo.users[5], 4, topo.params, topo.fexp));
}
BENCHMARK(BM_OptimalPower);

static void BM_EdgeWeights(benchmark::State& state) {
  const int u = static_cast<int>(state.range(0));
  const auto topo = harness::build_topology(sized(u, 12), 7);
  for (auto _ : state) benchmark::DoNotOptimize(opt::build_edge_weights(topo));
}
BENCHMARK(BM_EdgeWeights)->Arg(5)->Arg(15)->Arg(25)->Unit(benchmark::kMillisecond);

static void BM_WorstCaseLoad(benchmark::State& state) {
  const auto topo = harness::build_topology(harness::default_config(), 7);
  const auto sel = opt::propose_allocation(topo).selection();
  for (auto _ : state) benchmark::DoNotOptimize(analysis::worst_case_load(topo, sel));
}
BENCHMARK(BM_WorstCaseLoad)->Unit(benchmark::kMillisecond);

static void BM_RunSeed(benchmark::State& state) {
  auto c = harness::default_config();
  c.training.rounds = 200;
  for (auto _ : state) benchmark::DoNotOptimize(harness::run_experiment(c));
}
BENCHMARK(BM_RunSeed)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
