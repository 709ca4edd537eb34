#pragma once

// The lock-step round protocol on top of framed connections.
//
//   client -> JOIN(id)                      (once, before round 0)
//   server -> GLOBAL(r, weights)            (to every client)
//   client -> UPDATE(r, n_examples, weights)
//   ... server aggregates after all UPDATEs for r, then r + 1 ...
//   server -> DONE(rounds)
//
// Any violation ends the session with an ERROR frame and a ProtocolError.

#include "fedids/federation.hpp"
#include "fedids/wire.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedids {

class ProtocolError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One end of a framed, ordered, reliable link.
class Connection {
  public:
    virtual ~Connection() = default;
    virtual void send(const Frame& frame) = 0;
    /// nullopt when the peer closed the link.
    virtual std::optional<Frame> receive() = 0;
};

/// Records the bytes of every frame sent through the wrapped connection.
class RecordingConnection final : public Connection {
  public:
    RecordingConnection(Connection& inner, Bytes& sink) : inner_(inner), sink_(sink) {}
    void send(const Frame& frame) override;
    std::optional<Frame> receive() override { return inner_.receive(); }

  private:
    Connection& inner_;
    Bytes& sink_;
};

/// Reacts to one frame from the server with at most one reply.
using FrameHandler = std::function<std::optional<Frame>(const Frame&)>;

/// Server-side end of an in-process link. Every frame is serialized and parsed
/// back in both directions; the client handler runs synchronously inside send().
class LoopbackConnection final : public Connection {
  public:
    LoopbackConnection(std::optional<Frame> first_from_client, FrameHandler client);
    void send(const Frame& frame) override;
    std::optional<Frame> receive() override;

    /// Every byte the client side has sent toward the server.
    const Bytes& server_bound_bytes() const noexcept { return server_bound_; }

  private:
    FrameHandler client_;
    Bytes inbox_;
    std::size_t inbox_pos_ = 0;
    Bytes server_bound_;
};

/// Client side of the protocol around a FederatedClient.
class RoundProtocolClient {
  public:
    RoundProtocolClient(FederatedClient& client, FederationConfig config);

    Frame join_frame() const;
    /// GLOBAL -> UPDATE, DONE -> nothing (finished), ERROR -> ProtocolError.
    std::optional<Frame> handle(const Frame& frame);
    bool finished() const noexcept { return finished_; }

    /// Sends JOIN and answers frames until DONE.
    void run(Connection& connection);

    FrameHandler as_handler();

  private:
    FederatedClient& client_;
    FederationConfig config_;
    bool finished_ = false;
};

class RoundProtocolServer {
  public:
    RoundProtocolServer(FederationConfig config, EncoderConfig encoder);

    /// Runs the whole session. `clients` must hold exactly n_clients
    /// connections, each opening with a JOIN carrying a distinct id below n_clients.
    FederationResult serve(std::span<Connection* const> clients);

  private:
    FederationConfig config_;
    EncoderConfig encoder_;
};

struct LoopbackRun {
    FederationResult result;
    /// Per client, every byte it sent to the server.
    std::vector<Bytes> server_bound;
};

/// Full federation through LoopbackConnections, single-threaded.
LoopbackRun run_loopback_federation(const FederationConfig& config, const EncoderConfig& encoder,
                                    std::span<const TrainingExample> train);

}  // namespace fedids
