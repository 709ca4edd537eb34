#include "fedids/synthetic.hpp"
#include "fedids/tfidf.hpp"
#include "fedids/veremi.hpp"

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

namespace {

std::vector<std::string> corpus() {
    fedids::SyntheticSpec spec;
    std::vector<std::string> texts;
    for (const auto& r : fedids::generate_synthetic(spec)) texts.push_back(fedids::build_text(r));
    return texts;
}

void BM_FitTfidf(benchmark::State& state) {
    const auto texts = corpus();
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::fit_tfidf(texts));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(texts.size()));
}
BENCHMARK(BM_FitTfidf);

void BM_TfidfMatrix(benchmark::State& state) {
    const auto texts = corpus();
    const auto vocab = fedids::fit_tfidf(texts);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fedids::tfidf_matrix(vocab, texts));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(texts.size()));
}
BENCHMARK(BM_TfidfMatrix);

}  // namespace
