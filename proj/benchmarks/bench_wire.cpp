#include "fedids/encoder.hpp"
#include "fedids/wire.hpp"

#include <benchmark/benchmark.h>

namespace {

fedids::ParameterSet model() {
    fedids::EncoderConfig c;
    c.vocab_size = 16;
    c.d_model = 64;
    c.n_heads = 4;
    c.d_ff = 128;
    return fedids::init_params(c, 1);
}

void BM_EncodeWeights(benchmark::State& state) {
    const auto p = model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::encode_weights(p));
    }
}
BENCHMARK(BM_EncodeWeights);

void BM_DecodeWeights(benchmark::State& state) {
    const auto bytes = fedids::encode_weights(model());
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::decode_weights(bytes));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_DecodeWeights);

void BM_Crc32(benchmark::State& state) {
    const auto bytes = fedids::encode_weights(model());
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::crc32(bytes));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_Crc32);

}  // namespace
