#include "fedids/encoder.hpp"
#include "fedids/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

fedids::EncoderConfig config_for(std::size_t d_model) {
    fedids::EncoderConfig c;
    c.vocab_size = 16;
    c.d_model = d_model;
    c.n_heads = d_model >= 64 ? 4 : 2;
    c.d_ff = 2 * d_model;
    return c;
}

// Roughly the shape of a tokenized beacon: about 50 live tokens out of 64.
std::vector<fedids::TokenSequence> batch_of(std::size_t n, const fedids::EncoderConfig& c) {
    fedids::Rng rng(3);
    std::vector<fedids::TokenSequence> out(n);
    for (auto& s : out) {
        s.true_length = 50;
        for (std::size_t t = 0; t < c.max_len; ++t) {
            const bool live = t < s.true_length;
            s.ids.push_back(live ? static_cast<fedids::TokenId>(rng.below(c.vocab_size)) : 0);
            s.mask.push_back(live ? 1 : 0);
        }
    }
    return out;
}

void BM_LossAndGrad(benchmark::State& state) {
    const auto c = config_for(static_cast<std::size_t>(state.range(0)));
    const auto batch_size = static_cast<std::size_t>(state.range(1));
    const auto p = fedids::init_params(c, 1);
    const auto batch = batch_of(batch_size, c);
    std::vector<int> targets(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) targets[i] = static_cast<int>(i % c.n_classes);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::loss_and_grad(p, c, batch, targets));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch_size));
}
BENCHMARK(BM_LossAndGrad)->Args({32, 4})->Args({32, 32})->Args({64, 4})->Args({64, 32});

void BM_ForwardLogits(benchmark::State& state) {
    const auto c = config_for(static_cast<std::size_t>(state.range(0)));
    const auto p = fedids::init_params(c, 1);
    const auto batch = batch_of(256, c);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::forward_logits(p, c, batch));
    }
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ForwardLogits)->Arg(32)->Arg(64);

void BM_AdamStep(benchmark::State& state) {
    const auto c = config_for(64);
    auto p = fedids::init_params(c, 1);
    const fedids::GradientSet g(fedids::init_params(c, 2));
    auto s = fedids::AdamState::fresh(p, {});
    for (auto _ : state) {
        fedids::adam_step(p, g, s);
    }
}
BENCHMARK(BM_AdamStep);

}  // namespace
