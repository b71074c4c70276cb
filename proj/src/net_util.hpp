#pragma once

// POSIX socket helpers for the telemetry channel.

#include <cerrno>
#include <cstring>
#include <string>

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "cooking/error.hpp"

namespace cooking::detail {

class AddrInfo {
public:
    AddrInfo(const std::string& host, int port, bool passive) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        if (passive) hints.ai_flags = AI_PASSIVE;
        const std::string service = std::to_string(port);
        int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &list_);
        if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    ~AddrInfo() {
        if (list_) ::freeaddrinfo(list_);
    }
    AddrInfo(const AddrInfo&) = delete;
    AddrInfo& operator=(const AddrInfo&) = delete;

    const addrinfo* begin() const { return list_; }

private:
    addrinfo* list_ = nullptr;
};

inline std::string errno_text() { return std::strerror(errno); }

/// Writes all bytes; false on any error.
inline bool send_all(int fd, const char* data, std::size_t len) {
    while (len > 0) {
        ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data += n;
        len -= static_cast<std::size_t>(n);
    }
    return true;
}

/// Waits up to timeout_ms for fd to become readable.
inline bool wait_readable(int fd, int timeout_ms) {
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, timeout_ms);
    return rc > 0;
}

}  // namespace cooking::detail
