#include "fedids/federation.hpp"

#include "fedids/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace fedids {

namespace {

constexpr std::uint64_t kPartitionStream = 0xA771;
constexpr std::uint64_t kShuffleStream = 0xC11E;
constexpr std::uint64_t kReinitStream = 0x4E1;

std::vector<Shard> partition_iid(std::size_t n, std::size_t n_clients, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<Shard> shards(n_clients);
    const std::size_t base = n / n_clients;
    const std::size_t extra = n % n_clients;
    std::size_t next = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
        const std::size_t size = base + (c < extra ? 1 : 0);
        shards[c].assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                         order.begin() + static_cast<std::ptrdiff_t>(next + size));
        next += size;
    }
    return shards;
}

std::vector<Shard> partition_label_skew(std::span<const int> labels, std::size_t n_clients, double alpha,
                                        Rng& rng) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<Shard> shards(n_clients);
    for (auto& [label, members] : by_class) {
        rng.shuffle(std::span<std::size_t>(members));
        std::vector<double> share(n_clients);
        double total = 0.0;
        for (auto& s : share) {
            s = rng.gamma(alpha);
            total += s;
        }
        // Cumulative rounding keeps the per-class total exact.
        double cumulative = 0.0;
        std::size_t begin = 0;
        for (std::size_t c = 0; c < n_clients; ++c) {
            cumulative += share[c];
            std::size_t end = members.size();
            if (c + 1 < n_clients) {
                const auto rounded = std::llround(cumulative / total * static_cast<double>(members.size()));
                end = std::clamp(static_cast<std::size_t>(rounded), begin, members.size());
            }
            shards[c].insert(shards[c].end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                             members.begin() + static_cast<std::ptrdiff_t>(end));
            begin = end;
        }
    }
    // Every client must train on something: refill empty shards from the largest.
    for (auto& shard : shards) {
        if (!shard.empty()) continue;
        auto largest = std::max_element(shards.begin(), shards.end(),
                                        [](const Shard& a, const Shard& b) { return a.size() < b.size(); });
        shard.push_back(largest->back());
        largest->pop_back();
    }
    return shards;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

PartitionStrategy parse_partition_strategy(std::string_view name) {
    if (name == "iid") return PartitionStrategy::iid;
    if (name == "label_skew" || name == "label-skew") return PartitionStrategy::label_skew;
    throw std::invalid_argument("unknown partition strategy '" + std::string(name) + "'");
}

AggregationMode parse_aggregation_mode(std::string_view name) {
    if (name == "plain_mean" || name == "mean") return AggregationMode::plain_mean;
    if (name == "example_weighted" || name == "weighted") return AggregationMode::example_weighted;
    throw std::invalid_argument("unknown aggregation mode '" + std::string(name) + "'");
}

std::string_view to_string(PartitionStrategy strategy) {
    return strategy == PartitionStrategy::iid ? "iid" : "label_skew";
}

std::string_view to_string(AggregationMode mode) {
    return mode == AggregationMode::plain_mean ? "plain_mean" : "example_weighted";
}

void FederationConfig::validate() const {
    if (n_clients < 1) throw std::invalid_argument("federation: n_clients must be at least 1");
    if (local_epochs < 1) throw std::invalid_argument("federation: local_epochs must be at least 1");
    if (batch_size < 1) throw std::invalid_argument("federation: batch_size must be at least 1");
    if (threads < 1) throw std::invalid_argument("federation: threads must be at least 1");
    if (partition == PartitionStrategy::label_skew && !(dirichlet_alpha > 0.0)) {
        throw std::invalid_argument("federation: dirichlet_alpha must be positive");
    }
    if (n_clients > std::numeric_limits<std::uint32_t>::max() || rounds > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("federation: n_clients and rounds must fit in 32 bits");
    }
}

std::vector<Shard> partition(std::span<const int> labels, const FederationConfig& config) {
    config.validate();
    if (config.n_clients > labels.size()) {
        throw std::invalid_argument("partition: " + std::to_string(config.n_clients) + " clients but only " +
                                    std::to_string(labels.size()) + " examples");
    }
    Rng rng(derive_seed(config.seed, kPartitionStream));
    auto shards = config.partition == PartitionStrategy::iid
                      ? partition_iid(labels.size(), config.n_clients, rng)
                      : partition_label_skew(labels, config.n_clients, config.dirichlet_alpha, rng);
    for (auto& s : shards) std::sort(s.begin(), s.end());
    return shards;
}

std::uint64_t local_shuffle_seed(std::uint64_t federation_seed, std::uint64_t round, std::uint64_t client_id) {
    return derive_seed(federation_seed, kShuffleStream, round, client_id);
}

LocalTrainingOptions local_options(const FederationConfig& config, std::uint32_t round, std::uint32_t client_id) {
    return {config.local_epochs, config.batch_size, config.optimizer,
            local_shuffle_seed(config.seed, round, client_id)};
}

FederatedClient::FederatedClient(std::uint32_t client_id, std::vector<TrainingExample> shard, EncoderConfig config)
    : id_(client_id), shard_(std::move(shard)), config_(config) {
    if (shard_.empty()) {
        throw std::invalid_argument("client " + std::to_string(client_id) + ": empty shard");
    }
}

ClientUpdate FederatedClient::local_train(const ParameterSet& global, std::uint32_t round,
                                          const LocalTrainingOptions& options) {
    if (options.local_epochs < 1 || options.batch_size < 1) {
        throw std::invalid_argument("local_train: local_epochs and batch_size must be at least 1");
    }
    if (!local_.empty()) {
        require_same_layout(local_, global, "local_train");
    }
    local_ = global;
    auto state = AdamState::fresh(local_, options.optimizer);
    Rng rng(options.seed);

    std::vector<std::size_t> order(shard_.size());
    std::vector<TokenSequence> batch;
    std::vector<int> targets;
    double loss_sum = 0.0;
    for (std::size_t epoch = 0; epoch < options.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t stop = std::min(order.size(), start + options.batch_size);
            batch.clear();
            targets.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(shard_[order[i]].tokens);
                targets.push_back(shard_[order[i]].label);
            }
            const auto step = loss_and_grad(local_, config_, batch, targets);
            adam_step(local_, step.grads, state);
            loss_sum += step.loss * static_cast<double>(stop - start);
        }
    }
    ClientUpdate update;
    update.client_id = id_;
    update.round = round;
    update.weights = local_;
    update.n_examples = shard_.size();
    update.local_loss = loss_sum / static_cast<double>(shard_.size() * options.local_epochs);
    return update;
}

ParameterSet aggregate(std::span<const ClientUpdate> updates, AggregationMode mode) {
    if (updates.empty()) {
        throw std::invalid_argument("aggregate: no updates");
    }
    std::vector<const ClientUpdate*> ordered;
    ordered.reserve(updates.size());
    for (const auto& u : updates) ordered.push_back(&u);
    std::sort(ordered.begin(), ordered.end(),
              [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (ordered[i]->round != ordered.front()->round) {
            throw std::invalid_argument("aggregate: updates from different rounds");
        }
        require_same_layout(ordered.front()->weights, ordered[i]->weights, "aggregate");
        if (i > 0 && ordered[i]->client_id == ordered[i - 1]->client_id) {
            throw std::invalid_argument("aggregate: duplicate client id " + std::to_string(ordered[i]->client_id));
        }
        if (mode == AggregationMode::example_weighted && ordered[i]->n_examples == 0) {
            throw std::invalid_argument("aggregate: example-weighted mode needs non-empty clients");
        }
    }

    // Running mean: m <- m + share * (w - m), share = weight_i / cumulative weight.
    ParameterSet mean = ordered.front()->weights;
    double cumulative = mode == AggregationMode::plain_mean ? 1.0 : static_cast<double>(ordered.front()->n_examples);
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        const double weight = mode == AggregationMode::plain_mean ? 1.0 : static_cast<double>(ordered[i]->n_examples);
        cumulative += weight;
        const double share = weight / cumulative;
        const auto& incoming = ordered[i]->weights;
        for (std::size_t t = 0; t < mean.count(); ++t) {
            auto& m = mean[t].values;
            const auto& w = incoming[t].values;
            for (std::size_t j = 0; j < m.size(); ++j) {
                m[j] += share * (w[j] - m[j]);
            }
        }
    }
    return mean;
}

nlohmann::json to_json(const RoundLog& log) {
    nlohmann::json losses = nlohmann::json::array();
    for (const double l : log.client_losses) {
        losses.push_back(std::isfinite(l) ? nlohmann::json(l) : nlohmann::json(nullptr));
    }
    nlohmann::json j = {{"round", log.round},
                        {"client_losses", std::move(losses)},
                        {"agg_mode", std::string(to_string(log.agg_mode))},
                        {"wall_ms", log.wall_ms}};
    if (log.eval_accuracy) j["eval_accuracy"] = *log.eval_accuracy;
    return j;
}

void write_round_logs(std::ostream& out, std::span<const RoundLog> logs) {
    for (const auto& log : logs) out << to_json(log).dump() << '\n';
}

FederationServer::FederationServer(FederationConfig config, EncoderConfig encoder)
    : config_(std::move(config)), encoder_(encoder), global_(init_params(encoder, config_.seed)) {
    config_.validate();
}

ParameterSet FederationServer::begin_round(std::uint32_t round) {
    if (in_round_ || round != round_) {
        throw std::logic_error("federation server: round " + std::to_string(round) + " out of sequence");
    }
    if (config_.reinit_every > 0 && round > 0 && round % config_.reinit_every == 0) {
        global_ = init_params(encoder_, derive_seed(config_.seed, kReinitStream, round));
    }
    in_round_ = true;
    return config_.wire_precision ? quantized_to_single(global_) : global_;
}

void FederationServer::finish_round(std::span<const ClientUpdate> updates) {
    if (!in_round_) {
        throw std::logic_error("federation server: finish_round without begin_round");
    }
    if (updates.size() != config_.n_clients) {
        throw std::invalid_argument("federation server: expected " + std::to_string(config_.n_clients) +
                                    " updates, got " + std::to_string(updates.size()));
    }
    for (const auto& u : updates) {
        if (u.round != round_) {
            throw std::invalid_argument("federation server: update for round " + std::to_string(u.round) +
                                        " during round " + std::to_string(round_));
        }
        require_same_layout(global_, u.weights, "federation server");
    }
    global_ = aggregate(updates, config_.aggregation);
    in_round_ = false;
    ++round_;
}

std::vector<FederatedClient> make_clients(const FederationConfig& config, const EncoderConfig& encoder,
                                          std::span<const TrainingExample> train) {
    std::vector<int> labels;
    labels.reserve(train.size());
    for (const auto& ex : train) labels.push_back(ex.label);
    const auto shards = partition(labels, config);
    std::vector<FederatedClient> clients;
    clients.reserve(shards.size());
    for (std::size_t c = 0; c < shards.size(); ++c) {
        std::vector<TrainingExample> local;
        local.reserve(shards[c].size());
        for (const auto i : shards[c]) local.push_back(train[i]);
        clients.emplace_back(static_cast<std::uint32_t>(c), std::move(local), encoder);
    }
    return clients;
}

FederationResult run_federation(const FederationConfig& config, const EncoderConfig& encoder,
                                std::span<const TrainingExample> train, const RoundEvaluator& evaluate) {
    config.validate();
    encoder.validate();
    auto clients = make_clients(config, encoder, train);
    FederationServer server(config, encoder);

    FederationResult result;
    std::vector<ClientUpdate> updates(clients.size());
    for (std::uint32_t round = 0; round < config.rounds; ++round) {
        const auto start = std::chrono::steady_clock::now();
        const ParameterSet broadcast = server.begin_round(round);

        auto train_client = [&](std::size_t c) {
            updates[c] = clients[c].local_train(broadcast, round, local_options(config, round, clients[c].id()));
            if (config.wire_precision) quantize_to_single(updates[c].weights);
        };
        if (config.threads <= 1) {
            for (std::size_t c = 0; c < clients.size(); ++c) train_client(c);
        } else {
            std::vector<std::exception_ptr> errors(clients.size());
            for (std::size_t first = 0; first < clients.size(); first += config.threads) {
                std::vector<std::jthread> workers;
                for (std::size_t c = first; c < std::min(clients.size(), first + config.threads); ++c) {
                    workers.emplace_back([&, c] {
                        try {
                            train_client(c);
                        } catch (...) {
                            errors[c] = std::current_exception();
                        }
                    });
                }
            }
            for (const auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }
        server.finish_round(updates);

        RoundLog log;
        log.round = round;
        log.agg_mode = config.aggregation;
        for (const auto& u : updates) log.client_losses.push_back(u.local_loss);
        if (evaluate) log.eval_accuracy = evaluate(server.global());
        log.wall_ms = elapsed_ms(start);
        result.logs.push_back(std::move(log));
    }
    result.global = server.global();
    return result;
}

}  // namespace fedids
