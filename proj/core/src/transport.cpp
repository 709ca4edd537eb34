#include "fedids/transport.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

namespace fedids {

namespace {

Frame make_frame(MessageType type, Bytes payload) { return {type, std::move(payload)}; }

void broadcast_error(std::span<Connection* const> clients, const std::string& message) {
    const auto err = make_frame(MessageType::error, error_payload(message));
    for (auto* c : clients) {
        try {
            c->send(err);
        } catch (...) {
            // The session is already failing; a dead peer is not a new error.
        }
    }
}

Frame expect_frame(Connection& c, std::uint32_t client_id, const char* stage) {
    std::optional<Frame> f;
    try {
        f = c.receive();
    } catch (const FrameError& e) {
        throw ProtocolError("client " + std::to_string(client_id) + ": corrupt frame while waiting for " + stage +
                            ": " + e.what());
    }
    if (!f) {
        throw ProtocolError("client " + std::to_string(client_id) + ": connection lost while waiting for " + stage);
    }
    if (f->type == MessageType::error) {
        throw ProtocolError("client " + std::to_string(client_id) + " reported: " + parse_error_message(f->payload));
    }
    return std::move(*f);
}

}  // namespace

void RecordingConnection::send(const Frame& f) {
    const auto bytes = frame(f);
    sink_.insert(sink_.end(), bytes.begin(), bytes.end());
    inner_.send(f);
}

LoopbackConnection::LoopbackConnection(std::optional<Frame> first_from_client, FrameHandler client)
    : client_(std::move(client)) {
    if (first_from_client) {
        const auto bytes = frame(*first_from_client);
        inbox_.insert(inbox_.end(), bytes.begin(), bytes.end());
        server_bound_.insert(server_bound_.end(), bytes.begin(), bytes.end());
    }
}

void LoopbackConnection::send(const Frame& f) {
    const auto bytes = frame(f);
    BufferSource source(bytes);
    const auto delivered = deframe(source);
    const auto reply = client_(*delivered);
    if (reply) {
        const auto out = frame(*reply);
        inbox_.insert(inbox_.end(), out.begin(), out.end());
        server_bound_.insert(server_bound_.end(), out.begin(), out.end());
    }
}

std::optional<Frame> LoopbackConnection::receive() {
    BufferSource source(std::span<const std::uint8_t>(inbox_).subspan(inbox_pos_));
    auto f = deframe(source);
    inbox_pos_ = inbox_.size() - source.remaining();
    if (inbox_pos_ == inbox_.size()) {
        inbox_.clear();
        inbox_pos_ = 0;
    }
    return f;
}

RoundProtocolClient::RoundProtocolClient(FederatedClient& client, FederationConfig config)
    : client_(client), config_(std::move(config)) {}

Frame RoundProtocolClient::join_frame() const { return make_frame(MessageType::join, join_payload(client_.id())); }

std::optional<Frame> RoundProtocolClient::handle(const Frame& f) {
    switch (f.type) {
        case MessageType::global: {
            auto msg = parse_global(f.payload);
            const auto update = client_.local_train(msg.weights, msg.round, local_options(config_, msg.round, client_.id()));
            return make_frame(MessageType::update, update_payload(msg.round, update.n_examples, update.weights));
        }
        case MessageType::done:
            parse_done(f.payload);
            finished_ = true;
            return std::nullopt;
        case MessageType::error:
            throw ProtocolError("server aborted the session: " + parse_error_message(f.payload));
        default:
            throw ProtocolError("client: unexpected " + std::string(to_string(f.type)) + " frame from server");
    }
}

FrameHandler RoundProtocolClient::as_handler() {
    return [this](const Frame& f) { return handle(f); };
}

void RoundProtocolClient::run(Connection& connection) {
    connection.send(join_frame());
    while (!finished_) {
        auto f = connection.receive();
        if (!f) throw ProtocolError("client: server closed the connection before DONE");
        if (auto reply = handle(*f)) connection.send(*reply);
    }
}

RoundProtocolServer::RoundProtocolServer(FederationConfig config, EncoderConfig encoder)
    : config_(std::move(config)), encoder_(encoder) {
    config_.validate();
    encoder_.validate();
}

FederationResult RoundProtocolServer::serve(std::span<Connection* const> clients) {
    if (clients.size() != config_.n_clients) {
        const auto msg = "startup: expected " + std::to_string(config_.n_clients) + " clients, " +
                         std::to_string(clients.size()) + " joined";
        broadcast_error(clients, msg);
        throw ProtocolError(msg);
    }
    // Connection order sorted by announced client id.
    std::vector<std::pair<std::uint32_t, Connection*>> members;
    try {
        for (std::size_t i = 0; i < clients.size(); ++i) {
            const auto f = expect_frame(*clients[i], static_cast<std::uint32_t>(i), "JOIN");
            if (f.type != MessageType::join) {
                throw ProtocolError("startup: expected JOIN, got " + std::string(to_string(f.type)));
            }
            const auto id = parse_join(f.payload);
            if (id >= config_.n_clients) {
                throw ProtocolError("startup: client id " + std::to_string(id) + " is not below n_clients = " +
                                    std::to_string(config_.n_clients));
            }
            if (std::any_of(members.begin(), members.end(), [&](const auto& m) { return m.first == id; })) {
                throw ProtocolError("startup: client id " + std::to_string(id) + " joined twice");
            }
            members.emplace_back(id, clients[i]);
        }
    } catch (const std::exception& e) {
        broadcast_error(clients, e.what());
        throw;
    }
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    FederationServer server(config_, encoder_);
    FederationResult result;
    for (std::uint32_t round = 0; round < config_.rounds; ++round) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto global = make_frame(MessageType::global, global_payload(round, server.begin_round(round)));
            for (auto& [id, conn] : members) conn->send(global);

            std::vector<ClientUpdate> updates;
            updates.reserve(members.size());
            for (auto& [id, conn] : members) {
                const auto f = expect_frame(*conn, id, "UPDATE");
                if (f.type != MessageType::update) {
                    throw ProtocolError("round " + std::to_string(round) + ": client " + std::to_string(id) +
                                        " sent " + std::string(to_string(f.type)) + " instead of UPDATE");
                }
                auto msg = parse_update(f.payload);
                if (msg.round != round) {
                    throw ProtocolError("wrong-round update: client " + std::to_string(id) + " sent round " +
                                        std::to_string(msg.round) + " during round " + std::to_string(round));
                }
                if (!msg.weights.same_layout(server.global())) {
                    throw ProtocolError("round " + std::to_string(round) + ": client " + std::to_string(id) +
                                        " sent weights with a different layout");
                }
                updates.push_back({id, round, std::move(msg.weights), msg.n_examples,
                                   std::numeric_limits<double>::quiet_NaN()});
            }
            server.finish_round(updates);
        } catch (const std::exception& e) {
            broadcast_error(clients, e.what());
            throw;
        }
        RoundLog log;
        log.round = round;
        log.agg_mode = config_.aggregation;
        // Training losses stay on the clients; UPDATE carries weights and counts only.
        log.client_losses.assign(members.size(), std::numeric_limits<double>::quiet_NaN());
        log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.logs.push_back(std::move(log));
    }
    const auto done = make_frame(MessageType::done, done_payload(static_cast<std::uint32_t>(config_.rounds)));
    for (auto& [id, conn] : members) conn->send(done);
    result.global = server.global();
    return result;
}

LoopbackRun run_loopback_federation(const FederationConfig& config, const EncoderConfig& encoder,
                                    std::span<const TrainingExample> train) {
    auto clients = make_clients(config, encoder, train);
    std::vector<RoundProtocolClient> endpoints;
    endpoints.reserve(clients.size());
    for (auto& c : clients) endpoints.emplace_back(c, config);

    std::vector<std::unique_ptr<LoopbackConnection>> links;
    std::vector<Connection*> raw;
    for (auto& e : endpoints) {
        links.push_back(std::make_unique<LoopbackConnection>(e.join_frame(), e.as_handler()));
        raw.push_back(links.back().get());
    }
    LoopbackRun run;
    run.result = RoundProtocolServer(config, encoder).serve(raw);
    for (const auto& l : links) run.server_bound.push_back(l->server_bound_bytes());
    return run;
}

}  // namespace fedids
