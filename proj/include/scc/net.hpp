#pragma once

#include <arpa/inet.h>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <string>
#include <sys/socket.h>
#include <unistd.h>
#include <utility>
#include <vector>

#include "scc/errors.hpp"
#include "scc/wire.hpp"

namespace scc::net {

/// host:port pair.
struct Address {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    std::string to_string() const { return host + ":" + std::to_string(port); }

    static Address parse(const std::string& s) {
        const auto colon = s.rfind(':');
        if (colon == std::string::npos || colon + 1 == s.size()) throw InvalidArgument("address '" + s + "' is not host:port");
        Address a;
        a.host = colon == 0 ? "127.0.0.1" : s.substr(0, colon);
        unsigned long port = 0;
        try {
            std::size_t used = 0;
            port = std::stoul(s.substr(colon + 1), &used);
            if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InvalidArgument("bad port in address '" + s + "'");
        }
        if (port > 65535) throw InvalidArgument("port out of range in '" + s + "'");
        a.port = static_cast<std::uint16_t>(port);
        return a;
    }
};

/// Owning wrapper around a connected or listening TCP socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

    void close() {
        if (fd_ >= 0) ::close(std::exchange(fd_, -1));
    }

    /// Stops further reads and writes; a reader blocked on this socket wakes with EOF.
    void shutdown() {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

    void send_all(std::span<const std::uint8_t> bytes) const {
        std::size_t off = 0;
        while (off < bytes.size()) {
            const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError(std::string("send failed: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    /// Reads exactly out.size() bytes. Returns false on clean EOF before the first byte.
    bool recv_exact(std::span<std::uint8_t> out) const {
        std::size_t off = 0;
        while (off < out.size()) {
            const ssize_t n = ::recv(fd_, out.data() + off, out.size() - off, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError(std::string("recv failed: ") + std::strerror(errno));
            }
            if (n == 0) {
                if (off == 0) return false;
                throw ProtocolError("connection closed mid-frame");
            }
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    /// Waits until readable or the timeout passes; negative timeout waits forever.
    bool wait_readable(std::chrono::milliseconds timeout) const {
        pollfd p{fd_, POLLIN, 0};
        while (true) {
            const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
            if (r < 0) {
                if (errno == EINTR) continue;
                throw IoError(std::string("poll failed: ") + std::strerror(errno));
            }
            return r > 0;
        }
    }

private:
    int fd_ = -1;
};

inline void write_frame(const Socket& s, const wire::Frame& f) { s.send_all(wire::encode(f)); }

/// Reads one frame; returns false on clean EOF.
inline bool read_frame(const Socket& s, wire::Frame& out) {
    std::uint8_t header[wire::kHeaderSize];
    if (!s.recv_exact(header)) return false;
    const auto h = wire::decode_header(header);
    out.type = h.type;
    out.round_id = h.round_id;
    out.payload.assign(h.length, 0);
    if (h.length > 0 && !s.recv_exact(out.payload)) throw ProtocolError("connection closed mid-frame");
    return true;
}

namespace detail {

inline sockaddr_in resolve(const Address& a) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(a.port);
    if (::inet_pton(AF_INET, a.host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{}, *res = nullptr;
    hints.ai_family = AF_INET;
    if (::getaddrinfo(a.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
        throw IoError("cannot resolve host '" + a.host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

} // namespace detail

/// Binds and listens; port 0 picks a free port, reported through bound_port().
class Listener {
public:
    explicit Listener(const Address& a) {
        Socket s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) throw IoError(std::string("socket failed: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        const sockaddr_in addr = detail::resolve(a);
        if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
            throw IoError("cannot bind " + a.to_string() + ": " + std::strerror(errno));
        if (::listen(s.fd(), 16) != 0) throw IoError(std::string("listen failed: ") + std::strerror(errno));
        sockaddr_in bound{};
        socklen_t len = sizeof bound;
        ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
        address_ = {a.host, ntohs(bound.sin_port)};
        socket_ = std::move(s);
    }

    const Address& address() const { return address_; }
    std::uint16_t bound_port() const { return address_.port; }
    const Socket& socket() const { return socket_; }

    Socket accept() const {
        while (true) {
            const int fd = ::accept(socket_.fd(), nullptr, nullptr);
            if (fd >= 0) {
                int one = 1;
                ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                return Socket(fd);
            }
            if (errno == EINTR) continue;
            throw IoError(std::string("accept failed: ") + std::strerror(errno));
        }
    }

private:
    Socket socket_;
    Address address_;
};

/// Connects, retrying until `patience` runs out so that freshly started workers can come up.
inline Socket connect(const Address& a, std::chrono::milliseconds patience = std::chrono::milliseconds(5000)) {
    const auto deadline = std::chrono::steady_clock::now() + patience;
    const sockaddr_in addr = detail::resolve(a);
    while (true) {
        Socket s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) throw IoError(std::string("socket failed: ") + std::strerror(errno));
        if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
            int one = 1;
            ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return s;
        }
        const int err = errno;
        if (std::chrono::steady_clock::now() >= deadline)
            throw IoError("cannot connect to " + a.to_string() + ": " + std::strerror(err));
        ::usleep(20000);
    }
}

} // namespace scc::net
