#include "fedids/socket.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>
#include <thread>
#include <vector>

namespace fedids {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw SocketError(what + ": " + std::strerror(errno));
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &found); rc != 0 || !found) {
        throw SocketError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
    ::freeaddrinfo(found);
    return addr;
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

FileDescriptor& FileDescriptor::operator=(FileDescriptor&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = other.release();
    }
    return *this;
}

FileDescriptor::~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
}

int FileDescriptor::release() noexcept {
    const int fd = fd_;
    fd_ = -1;
    return fd;
}

TcpConnection::TcpConnection(FileDescriptor fd) : fd_(std::move(fd)), source_(fd_.get()) {}

TcpConnection TcpConnection::connect(const std::string& host, std::uint16_t port,
                                     std::chrono::milliseconds timeout) {
    const auto addr = resolve(host, port);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        FileDescriptor fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (!fd.valid()) fail("socket");
        if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
            set_nodelay(fd.get());
            return TcpConnection(std::move(fd));
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            fail("connect to " + host + ":" + std::to_string(port));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

void TcpConnection::send(const Frame& f) {
    const auto bytes = frame(f);
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const auto n = ::send(fd_.get(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("send");
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::optional<Frame> TcpConnection::receive() { return deframe(source_); }

std::size_t TcpConnection::Source::read_some(std::span<std::uint8_t> out) {
    while (true) {
        const auto n = ::recv(fd_, out.data(), out.size(), 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        // A reset peer reads as end of stream; the protocol layer reports it.
        if (errno == ECONNRESET) return 0;
        fail("recv");
    }
}

TcpListener::TcpListener(std::uint16_t port, const std::string& host) : fd_(::socket(AF_INET, SOCK_STREAM, 0)) {
    if (!fd_.valid()) fail("socket");
    int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto addr = resolve(host, port);
    if (::bind(fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
        fail("bind " + host + ":" + std::to_string(port));
    }
    if (::listen(fd_.get(), 64) != 0) fail("listen");
    socklen_t len = sizeof addr;
    if (::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) fail("getsockname");
    port_ = ntohs(addr.sin_port);
}

std::optional<TcpConnection> TcpListener::accept(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        pollfd p{fd_.get(), POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
        if (rc < 0) {
            if (errno == EINTR) continue;
            fail("poll");
        }
        if (rc == 0) return std::nullopt;
        FileDescriptor fd(::accept(fd_.get(), nullptr, nullptr));
        if (!fd.valid()) {
            if (errno == EINTR || errno == ECONNABORTED) continue;
            fail("accept");
        }
        set_nodelay(fd.get());
        return TcpConnection(std::move(fd));
    }
}

FederationResult serve_round_protocol(TcpListener& listener, const FederationConfig& config,
                                      const EncoderConfig& encoder, std::chrono::milliseconds join_timeout) {
    config.validate();
    const auto deadline = std::chrono::steady_clock::now() + join_timeout;
    std::vector<std::unique_ptr<TcpConnection>> connections;
    while (connections.size() < config.n_clients) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        auto c = left.count() > 0 ? listener.accept(left) : std::nullopt;
        if (!c) break;
        connections.push_back(std::make_unique<TcpConnection>(std::move(*c)));
    }
    std::vector<Connection*> raw;
    for (auto& c : connections) raw.push_back(c.get());
    // A short roster is reported (and broadcast as ERROR) by the protocol server.
    return RoundProtocolServer(config, encoder).serve(raw);
}

void run_socket_client(FederatedClient& client, const FederationConfig& config, const std::string& host,
                       std::uint16_t port, std::chrono::milliseconds connect_timeout) {
    auto connection = TcpConnection::connect(host, port, connect_timeout);
    RoundProtocolClient(client, config).run(connection);
}

}  // namespace fedids
