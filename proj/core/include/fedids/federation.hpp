#pragma once

// Client/server federated training. Each round the server broadcasts its
// global weights, every client overwrites its local model with them, trains
// locally with a fresh optimizer, and the server averages the returned weights.

#include "fedids/encoder.hpp"
#include "fedids/params.hpp"
#include "fedids/tokenizer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fedids {

struct TrainingExample {
    TokenSequence tokens;
    int label = 0;
};

enum class PartitionStrategy { iid, label_skew };
enum class AggregationMode { plain_mean, example_weighted };

PartitionStrategy parse_partition_strategy(std::string_view name);
AggregationMode parse_aggregation_mode(std::string_view name);
std::string_view to_string(PartitionStrategy strategy);
std::string_view to_string(AggregationMode mode);

struct FederationConfig {
    std::size_t n_clients = 4;
    std::size_t rounds = 10;
    std::size_t local_epochs = 1;
    std::size_t batch_size = 32;
    PartitionStrategy partition = PartitionStrategy::iid;
    double dirichlet_alpha = 0.5;  // label-skew concentration
    AggregationMode aggregation = AggregationMode::plain_mean;
    /// Re-initialize the global model from scratch every K rounds; 0 disables.
    std::size_t reinit_every = 0;
    std::uint64_t seed = 0;
    AdamHyper optimizer;
    /// Clients trained concurrently within a round. Results do not depend on it.
    std::size_t threads = 1;
    /// Round weights to single precision on every server/client hand-off, as
    /// the wire transport does.
    bool wire_precision = false;

    void validate() const;
};

/// Indices into the training set; ascending within a shard.
using Shard = std::vector<std::size_t>;

/// iid: seeded shuffle cut into contiguous near-equal shards (sizes differ by at
/// most one, larger shards first). label_skew: per-class Dirichlet(alpha)
/// proportions. Either way the shards partition 0..labels.size()-1.
std::vector<Shard> partition(std::span<const int> labels, const FederationConfig& config);

struct ClientUpdate {
    std::uint32_t client_id = 0;
    std::uint32_t round = 0;
    ParameterSet weights;
    std::uint64_t n_examples = 0;
    /// Mean per-example training loss over the local run; NaN when unknown.
    double local_loss = 0.0;
};

struct LocalTrainingOptions {
    std::size_t local_epochs = 1;
    std::size_t batch_size = 32;
    AdamHyper optimizer;
    std::uint64_t seed = 0;
};

/// Seed of the mini-batch shuffle stream for one client in one round.
std::uint64_t local_shuffle_seed(std::uint64_t federation_seed, std::uint64_t round,
                                 std::uint64_t client_id);

/// A client owns its shard for the lifetime of the federation; only weights
/// and counts ever leave it.
class FederatedClient {
  public:
    FederatedClient(std::uint32_t client_id, std::vector<TrainingExample> shard, EncoderConfig config);

    /// Resets the local model to `global`, runs seeded mini-batch Adam from a
    /// fresh optimizer state, and reports the resulting weights.
    ClientUpdate local_train(const ParameterSet& global, std::uint32_t round,
                             const LocalTrainingOptions& options);

    std::uint32_t id() const noexcept { return id_; }
    std::size_t shard_size() const noexcept { return shard_.size(); }
    std::span<const TrainingExample> shard() const noexcept { return shard_; }
    const ParameterSet& local_weights() const noexcept { return local_; }

  private:
    std::uint32_t id_;
    std::vector<TrainingExample> shard_;
    EncoderConfig config_;
    ParameterSet local_;
};

/// plain_mean: elementwise mean; example_weighted: sum of (n_i / sum n) * w_i.
/// Accumulated as a running mean in ascending client_id order, so a single
/// update (or k identical ones) comes back bit-for-bit.
ParameterSet aggregate(std::span<const ClientUpdate> updates, AggregationMode mode);

struct RoundLog {
    std::size_t round = 0;
    std::vector<double> client_losses;  // ascending client_id
    AggregationMode agg_mode = AggregationMode::plain_mean;
    double wall_ms = 0.0;
    std::optional<double> eval_accuracy;
};

nlohmann::json to_json(const RoundLog& log);
void write_round_logs(std::ostream& out, std::span<const RoundLog> logs);

/// Holds the global model between rounds.
class FederationServer {
  public:
    FederationServer(FederationConfig config, EncoderConfig encoder);

    /// Weights to broadcast for `round` (applies the optional reinit schedule).
    ParameterSet begin_round(std::uint32_t round);
    /// Aggregates one update per client for the current round and installs the result.
    void finish_round(std::span<const ClientUpdate> updates);

    const ParameterSet& global() const noexcept { return global_; }
    std::uint32_t current_round() const noexcept { return round_; }
    const FederationConfig& config() const noexcept { return config_; }
    const EncoderConfig& encoder() const noexcept { return encoder_; }

  private:
    FederationConfig config_;
    EncoderConfig encoder_;
    ParameterSet global_;
    std::uint32_t round_ = 0;
    bool in_round_ = false;
};

struct FederationResult {
    ParameterSet global;
    std::vector<RoundLog> logs;
};

/// Optional per-round evaluation of the freshly aggregated model.
using RoundEvaluator = std::function<std::optional<double>(const ParameterSet&)>;

/// Builds clients from `partition(train)`, then runs `config.rounds` rounds.
FederationResult run_federation(const FederationConfig& config, const EncoderConfig& encoder,
                                std::span<const TrainingExample> train,
                                const RoundEvaluator& evaluate = {});

/// Splits examples into client shards following `partition`.
std::vector<FederatedClient> make_clients(const FederationConfig& config, const EncoderConfig& encoder,
                                          std::span<const TrainingExample> train);

/// Local training options for a client in a given round.
LocalTrainingOptions local_options(const FederationConfig& config, std::uint32_t round, std::uint32_t client_id);

}  // namespace fedids
