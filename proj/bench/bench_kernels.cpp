#include <benchmark/benchmark.h>

#include <array>

#include "coinprune/kernels.hpp"
#include "coinprune/simnet.hpp"

namespace {

using namespace coinprune;

std::vector<Bytes> make_items(std::size_t n, std::size_t size) {
    Rng rng(7);
    std::vector<Bytes> items(n, Bytes(size));
    for (auto& item : items)
        for (auto& b : item) b = static_cast<std::uint8_t>(rng.next());
    return items;
}

template <auto Fn>
void bm_hash_each(benchmark::State& state) {
    const auto items = make_items(static_cast<std::size_t>(state.range(0)), 16384);
    std::vector<ByteView> views(items.begin(), items.end());
    for (auto _ : state) benchmark::DoNotOptimize(Fn(views));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0) * 16384);
}

Scenario small_scenario() {
    Scenario s;
    s.name = "bench";
    s.pulse = {32, 8, 4};
    s.chain_length = 80;
    s.chunk_limit = 4096;
    for (int i = 0; i < 6; ++i) {
        NodeConfig c;
        c.role = i == 0 ? Role::CoinPruneFull : Role::CoinPruneMiner;
        c.mining_power = i == 0 ? 0 : 10;
        c.pulse = s.pulse;
        c.chunk_limit = s.chunk_limit;
        c.neighbor_count = 3;
        s.nodes.push_back(c);
    }
    return s;
}

template <auto Fn>
void bm_batch(benchmark::State& state) {
    const Scenario s = small_scenario();
    const std::array<std::uint64_t, 4> seeds{1, 2, 3, 4};
    for (auto _ : state) benchmark::DoNotOptimize(Fn(s, seeds));
}

}  // namespace

BENCHMARK(bm_hash_each<&kernels::serial::hash_each>)->Name("hash_each/serial")->Arg(64)->Arg(512);
BENCHMARK(bm_hash_each<&kernels::omp::hash_each>)->Name("hash_each/omp")->Arg(64)->Arg(512);
BENCHMARK(bm_batch<&run_batch_serial>)->Name("run_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(bm_batch<&run_batch>)->Name("run_batch/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
