#pragma once

// POSIX TCP carrier for the round protocol.

#include "fedids/transport.hpp"

#include <chrono>
#include <cstdint>
#include <string>

namespace fedids {

class SocketError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class FileDescriptor {
  public:
    FileDescriptor() = default;
    explicit FileDescriptor(int fd) noexcept : fd_(fd) {}
    FileDescriptor(FileDescriptor&& other) noexcept : fd_(other.release()) {}
    FileDescriptor& operator=(FileDescriptor&& other) noexcept;
    FileDescriptor(const FileDescriptor&) = delete;
    FileDescriptor& operator=(const FileDescriptor&) = delete;
    ~FileDescriptor();

    int get() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    int release() noexcept;

  private:
    int fd_ = -1;
};

class TcpConnection final : public Connection {
  public:
    explicit TcpConnection(FileDescriptor fd);

    /// Retries until the server accepts or `timeout` elapses.
    static TcpConnection connect(const std::string& host, std::uint16_t port,
                                 std::chrono::milliseconds timeout = std::chrono::seconds(10));

    void send(const Frame& frame) override;
    std::optional<Frame> receive() override;

  private:
    class Source final : public ByteSource {
      public:
        explicit Source(int fd) : fd_(fd) {}
        std::size_t read_some(std::span<std::uint8_t> out) override;

      private:
        int fd_;
    };

    FileDescriptor fd_;
    Source source_;
};

class TcpListener {
  public:
    /// Port 0 picks an ephemeral port; see port().
    explicit TcpListener(std::uint16_t port, const std::string& host = "127.0.0.1");

    std::uint16_t port() const noexcept { return port_; }
    /// nullopt when nobody connects before `timeout`.
    std::optional<TcpConnection> accept(std::chrono::milliseconds timeout);

  private:
    FileDescriptor fd_;
    std::uint16_t port_ = 0;
};

/// Accepts exactly config.n_clients connections (failing with ProtocolError if
/// fewer arrive before `join_timeout`), then runs the session.
FederationResult serve_round_protocol(TcpListener& listener, const FederationConfig& config,
                                      const EncoderConfig& encoder,
                                      std::chrono::milliseconds join_timeout = std::chrono::seconds(30));

/// Connects, joins and trains until DONE.
void run_socket_client(FederatedClient& client, const FederationConfig& config, const std::string& host,
                       std::uint16_t port, std::chrono::milliseconds connect_timeout = std::chrono::seconds(10));

}  // namespace fedids
