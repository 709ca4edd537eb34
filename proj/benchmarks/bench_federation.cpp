#include "fedids/encoder.hpp"
#include "fedids/federation.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

void BM_Aggregate(benchmark::State& state) {
    fedids::EncoderConfig c;
    c.vocab_size = 16;
    c.d_model = 64;
    c.n_heads = 4;
    c.d_ff = 128;
    std::vector<fedids::ClientUpdate> updates;
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(state.range(0)); ++i) {
        updates.push_back({i, 0, fedids::init_params(c, i), 100 + i, 0.0});
    }
    const auto mode = state.range(1) == 0 ? fedids::AggregationMode::plain_mean : fedids::AggregationMode::example_weighted;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::aggregate(updates, mode));
    }
}
BENCHMARK(BM_Aggregate)->Args({4, 0})->Args({4, 1})->Args({16, 0});

}  // namespace
