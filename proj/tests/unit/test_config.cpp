#include "fedids/config.hpp"

#include <doctest.h>

using namespace fedids;

namespace {

template <class F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("defaults survive an empty file") {
    const auto c = parse_config("");
    CHECK(c.data.source == "synthetic");
    CHECK(c.data.split_ratio == 0.8);
    CHECK(c.fed.n_clients == 4);
    CHECK(c.fed.rounds == 10);
    CHECK(c.fed.aggregation == AggregationMode::plain_mean);
    CHECK(c.baseline.max_features == 1000);
    CHECK(c.baseline.knn_k == 5);
    CHECK_FALSE(c.baseline.knn_condense);
    CHECK(c.baseline.rf.n_trees == 100);
    CHECK(c.fed.reinit_every == 0);
    CHECK(c.model.d_model == 32);
    CHECK(c.model.n_layers == 2);
    CHECK(c.fed.optimizer.learning_rate == 1e-3);
}

TEST_CASE("parse sections, types, arrays and tables") {
    const auto c = parse_config(R"(
# experiment
[data]
source = "file"   # inline comment
path = "logs/a#b.csv"
format = "jsonl"
resample = true
split_ratio = 0.75
split_seed = 18446744073709551615

[data.targets]
0 = 100
16 = 20

[fed]
n_clients = 2
aggregation = "example_weighted"
learning_rate = 5e-3
partition = "label_skew"
dirichlet_alpha = 0.3

[baseline]
models = ["lr", "knn"]
knn_condense = true

[synth]
fixed_position = [1.5, -2, 0]

[synth.counts]
0 = 10
8 = 5
)");
    CHECK(c.data.source == "file");
    CHECK(c.data.path == "logs/a#b.csv");
    CHECK(c.data.format == RecordFormat::jsonl);
    CHECK(c.data.resample);
    CHECK(c.data.split_ratio == 0.75);
    CHECK(c.data.split_seed == 18446744073709551615ULL);
    CHECK(c.data.targets == ResampleTargets{{0, 100}, {16, 20}});
    CHECK(c.fed.n_clients == 2);
    CHECK(c.fed.aggregation == AggregationMode::example_weighted);
    CHECK(c.fed.optimizer.learning_rate == 5e-3);
    CHECK(c.fed.partition == PartitionStrategy::label_skew);
    CHECK(c.baseline.models == std::vector<std::string>{"lr", "knn"});
    CHECK(c.baseline.knn_condense);
    CHECK(c.synth.fixed_position == Vec3{1.5, -2, 0});
    CHECK(c.synth.counts == std::map<int, std::size_t>{{0, 10}, {8, 5}});
}

TEST_CASE("to_toml round-trips") {
    auto c = parse_config("[fed]\nrounds = 3\n[baseline]\nmodels = [\"rf\"]\n[data.targets]\n4 = 9\n");
    c.override_seeds(99);
    c.synth.offset = {0.1, 1e-17, -3};
    c.fed.optimizer.epsilon = 1.0 / 3.0;
    const auto text = to_toml(c);
    const auto back = parse_config(text);
    CHECK(to_toml(back) == text);
    CHECK(back.fed.seed == 99);
    CHECK(back.data.split_seed == 99);
    CHECK(back.baseline.rf.seed == 99);
    CHECK(back.synth.seed == 99);
    CHECK(back.synth.offset == c.synth.offset);
    CHECK(back.fed.optimizer.epsilon == c.fed.optimizer.epsilon);
    CHECK(back.data.targets == c.data.targets);
    CHECK(back.fed.rounds == 3);
}

TEST_CASE("errors name the line") {
    CHECK(error_of([] { parse_config("[fed]\nbogus = 1\n"); }).find("line 2") != std::string::npos);
    CHECK(error_of([] { parse_config("[fed]\nbogus = 1\n"); }).find("bogus") != std::string::npos);
    CHECK(error_of([] { parse_config("[nosuch]\n"); }).find("line 1") != std::string::npos);
    CHECK_FALSE(error_of([] { parse_config("[fed]\nrounds = 1\nrounds = 2\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[fed]\nrounds = \"x\"\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[fed]\nrounds = -1\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[fed]\nrounds\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[data]\nsplit_ratio = 1.5\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[data.targets]\n3 = 10\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[fed]\nn_clients = 0\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[model]\nd_model = 30\nn_heads = 4\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[baseline]\nmodels = [\"rf\", \"xgb\"]\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config("[data]\nsource = \"file\"\n"); }).empty());
    CHECK_FALSE(error_of([] { load_config("/nonexistent/dir/config.toml"); }).empty());
}
