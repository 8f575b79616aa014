#include <benchmark/benchmark.h>

#include "percolation/fountain.hpp"
#include "percolation/random.hpp"

using namespace perc;

namespace {

SourceBlock random_block(std::uint16_t k, std::uint16_t m) {
  Rng rng(k * 31u + m);
  std::vector<std::uint8_t> data(std::size_t{k} * m);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng.next());
  return SourceBlock(k, m, std::move(data));
}

void BM_EncodePacket(benchmark::State& state) {
  const auto k = static_cast<std::uint16_t>(state.range(0));
  const auto m = static_cast<std::uint16_t>(state.range(1));
  const Encoder encoder(random_block(k, m), 0);
  std::uint32_t n = 0;
  for (auto _ : state) benchmark::DoNotOptimize(encoder.packet(n++));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * m);
}
BENCHMARK(BM_EncodePacket)->Args({100, 64})->Args({1000, 1024});

void BM_EncodeByColumns(benchmark::State& state) {
  const auto block = random_block(100, 64);
  std::uint32_t n = 0;
  for (auto _ : state) benchmark::DoNotOptimize(encode_packet_by_columns(block, 0, n++));
}
BENCHMARK(BM_EncodeByColumns);

// Encodes and peels one full frame per iteration.
void BM_DecodeFrame(benchmark::State& state) {
  const auto k = static_cast<std::uint16_t>(state.range(0));
  const auto m = static_cast<std::uint16_t>(state.range(1));
  const auto block = random_block(k, m);
  std::uint32_t frame = 0;
  std::int64_t packets = 0;
  for (auto _ : state) {
    const Encoder encoder(block, frame);
    Decoder decoder(frame, k, m);
    std::uint32_t n = 0;
    while (!decoder.complete()) decoder.push(encoder.packet(n++));
    packets += n;
    ++frame;
  }
  state.counters["packets_per_frame"] = benchmark::Counter(static_cast<double>(packets), benchmark::Counter::kAvgIterations);
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * k * m);
}
BENCHMARK(BM_DecodeFrame)->Args({32, 64})->Args({100, 64})->Args({1000, 256})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
