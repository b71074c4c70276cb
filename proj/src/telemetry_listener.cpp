#include "cooking/server.hpp"

#include "cooking/error.hpp"
#include "net_util.hpp"

#include <algorithm>
#include <chrono>

namespace cooking::server {

namespace {

constexpr std::size_t kMaxLine = 64 * 1024;
constexpr int kPollMs = 100;

}  // namespace

std::pair<std::string, int> parse_address(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos) throw ParseError("address '" + address + "' must be host:port");
    std::string host = address.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(address.substr(colon + 1), &used);
        if (used != address.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ParseError("address '" + address + "' has a bad port");
    }
    if (port < 0 || port > 65535) throw ParseError("address '" + address + "' has a bad port");
    if (host.empty()) host = "127.0.0.1";
    return {host, port};
}

struct TelemetryListener::Connection {
    int fd = -1;
    std::mutex write_mutex;
    std::thread thread;
    std::atomic<bool> done{false};

    bool send(const std::string& line) {
        std::lock_guard lock(write_mutex);
        if (fd < 0) return false;
        std::string framed = line + "\n";
        return detail::send_all(fd, framed.data(), framed.size());
    }
};

TelemetryListener::TelemetryListener(control::Service& service) : service_(service) {}

TelemetryListener::~TelemetryListener() { stop(); }

int TelemetryListener::bind(const std::string& host, int port) {
    detail::AddrInfo addrs(host, port, true);
    std::string last_error = "no usable address";
    for (auto* ai = addrs.begin(); ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        int yes = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
            sockaddr_storage bound{};
            socklen_t len = sizeof bound;
            ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
            port_ = ntohs(bound.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                                                      : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
            listen_fd_ = fd;
            return port_;
        }
        last_error = detail::errno_text();
        ::close(fd);
    }
    throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + last_error);
}

void TelemetryListener::start() {
    if (listen_fd_ < 0) throw TransportError("telemetry listener is not bound");
    stopping_ = false;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TelemetryListener::stop() {
    stopping_ = true;
    if (acceptor_.joinable()) acceptor_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    std::list<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lock(connections_mutex_);
        conns.swap(connections_);
    }
    for (auto& c : conns) {
        {
            std::lock_guard lock(c->write_mutex);
            if (c->fd >= 0) ::shutdown(c->fd, SHUT_RDWR);
        }
        if (c->thread.joinable()) c->thread.join();
    }
}

void TelemetryListener::reap() {
    std::lock_guard lock(connections_mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
        if ((*it)->done) {
            if ((*it)->thread.joinable()) (*it)->thread.join();
            it = connections_.erase(it);
        } else {
            ++it;
        }
    }
}

void TelemetryListener::accept_loop() {
    while (!stopping_) {
        reap();
        if (!detail::wait_readable(listen_fd_, kPollMs)) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int yes = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
        auto conn = std::make_shared<Connection>();
        conn->fd = fd;
        std::lock_guard lock(connections_mutex_);
        connections_.push_back(conn);
        conn->thread = std::thread([this, conn] { serve(conn); });
    }
}

void TelemetryListener::serve(const std::shared_ptr<Connection>& conn) {
    control::DeviceConnection session(service_, [conn](const std::string& line) { return conn->send(line); });
    std::string buffer;
    char chunk[4096];
    bool open = true;
    while (open && !stopping_) {
        if (!detail::wait_readable(conn->fd, kPollMs)) continue;
        ssize_t n = ::recv(conn->fd, chunk, sizeof chunk, 0);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            break;
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
            if (!session.on_line(std::string_view(buffer).substr(start, nl - start))) {
                open = false;
                break;
            }
            start = nl + 1;
        }
        buffer.erase(0, start);
        if (buffer.size() > kMaxLine) break;
    }
    session.close();
    {
        std::lock_guard lock(conn->write_mutex);
        ::close(conn->fd);
        conn->fd = -1;
    }
    conn->done = true;
}

// TcpDeviceLink

TcpDeviceLink::TcpDeviceLink(const std::string& host, int port) {
    detail::AddrInfo addrs(host, port, false);
    std::string last_error = "no usable address";
    for (auto* ai = addrs.begin(); ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            int yes = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
            fd_ = fd;
            return;
        }
        last_error = detail::errno_text();
        ::close(fd);
    }
    throw TransportError("cannot connect to " + host + ":" + std::to_string(port) + ": " + last_error);
}

TcpDeviceLink::~TcpDeviceLink() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpDeviceLink::send_line(const std::string& line) {
    if (fd_ < 0) throw TransportError("link is closed");
    std::string framed = line + "\n";
    if (!detail::send_all(fd_, framed.data(), framed.size()))
        throw TransportError("send failed: " + detail::errno_text());
}

std::optional<std::string> TcpDeviceLink::poll_line() {
    for (;;) {
        if (auto nl = inbox_.find('\n'); nl != std::string::npos) {
            std::string line = inbox_.substr(0, nl);
            inbox_.erase(0, nl + 1);
            return line;
        }
        if (fd_ < 0 || !detail::wait_readable(fd_, 0)) return std::nullopt;
        char chunk[4096];
        ssize_t n = ::recv(fd_, chunk, sizeof chunk, MSG_DONTWAIT);
        if (n <= 0) return std::nullopt;
        inbox_.append(chunk, static_cast<std::size_t>(n));
    }
}

void TcpDeviceLink::close() {
    if (fd_ < 0) return;
    ::shutdown(fd_, SHUT_WR);
    // Drain until the server closes its side so every line has been read.
    char chunk[4096];
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (std::chrono::steady_clock::now() < deadline) {
        if (!detail::wait_readable(fd_, 100)) continue;
        ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) break;
    }
    ::close(fd_);
    fd_ = -1;
}

}  // namespace cooking::server
