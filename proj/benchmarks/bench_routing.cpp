#include <benchmark/benchmark.h>

#include "percolation/routing_phase.hpp"
#include "percolation/sim.hpp"
#include "percolation/topology.hpp"
#include "percolation/transport.hpp"

using namespace perc;

namespace {

Graph small_world(std::uint32_t n) {
  return generate_small_world({.n = n, .k = 6, .p = 0.1, .default_bandwidth = 2, .seed = n});
}

void BM_GenerateSmallWorld(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_small_world({.n = n, .k = 8, .p = 0.1, .default_bandwidth = 1, .seed = seed++}));
  }
}
BENCHMARK(BM_GenerateSmallWorld)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_RoutingPhase(benchmark::State& state) {
  const auto g = small_world(static_cast<std::uint32_t>(state.range(0)));
  const auto nodes = g.nodes();
  std::uint64_t seed = 0;
  std::int64_t found = 0;
  for (auto _ : state) {
    Network net(g, LinkModel{}, seed);
    const NodeId s = nodes[seed % nodes.size()];
    const NodeId d = nodes[(seed * 7 + nodes.size() / 2) % nodes.size()];
    ++seed;
    if (s == d) continue;
    found += run_routing_phase(net, s, d, RoutingParams{}).ok();
  }
  state.counters["success"] = benchmark::Counter(static_cast<double>(found), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_RoutingPhase)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

// Routing phase followed by one feedback-mode frame.
void BM_RouteAndTransfer(benchmark::State& state) {
  const auto g = small_world(100);
  const std::vector<std::uint8_t> data(64 * 32, 0x5a);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Network net(g, LinkModel{.loss_probability = 0.05}, seed++);
    const auto r = run_routing_phase(net, NodeId{0}, NodeId{50}, RoutingParams{});
    if (r.ok()) benchmark::DoNotOptimize(transmit_file(net, *r.route, data, {.k = 64, .m = 32}));
  }
}
BENCHMARK(BM_RouteAndTransfer)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
