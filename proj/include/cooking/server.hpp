#pragma once

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "cooking/assistant.hpp"
#include "cooking/control_plane.hpp"
#include "cooking/doneness.hpp"
#include "cooking/thermo_sim.hpp"

namespace cooking::server {

/// "host:port" -> (host, port). Throws ParseError.
std::pair<std::string, int> parse_address(const std::string& address);

/// REST/JSON API, server-sent event stream, legacy voice endpoint and the
/// assistant endpoint, over one HTTP listener.
class ApiServer {
public:
    ApiServer(control::Service& service, const kb::DonenessTable& table);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds host:port (0 picks a free port) and returns the bound port.
    /// Throws TransportError when the address is unavailable.
    int bind(const std::string& host, int port);
    /// Serves on a background thread until stop().
    void start();
    void stop();
    int port() const { return port_; }

    /// Enables POST /api/assistant/utterance. The gateway must outlive the server.
    void set_gateway(const assistant::Gateway* gateway);
    /// Serves static files from dir under /ui/.
    bool mount_ui(const std::string& dir);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

/// Accepts device byte-stream connections speaking the line protocol.
class TelemetryListener {
public:
    explicit TelemetryListener(control::Service& service);
    ~TelemetryListener();

    TelemetryListener(const TelemetryListener&) = delete;
    TelemetryListener& operator=(const TelemetryListener&) = delete;

    /// Throws TransportError when the address is unavailable.
    int bind(const std::string& host, int port);
    void start();
    void stop();
    int port() const { return port_; }

private:
    struct Connection;

    void accept_loop();
    void serve(const std::shared_ptr<Connection>& conn);
    void reap();

    control::Service& service_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread acceptor_;
    std::mutex connections_mutex_;
    std::list<std::shared_ptr<Connection>> connections_;
};

/// Device side of a TCP telemetry connection.
class TcpDeviceLink : public sim::DeviceLink {
public:
    /// Throws TransportError when the connection cannot be opened.
    TcpDeviceLink(const std::string& host, int port);
    ~TcpDeviceLink() override;

    TcpDeviceLink(const TcpDeviceLink&) = delete;
    TcpDeviceLink& operator=(const TcpDeviceLink&) = delete;

    void send_line(const std::string& line) override;
    std::optional<std::string> poll_line() override;
    /// Half-closes the connection and waits (bounded) for the peer to close.
    void close();

private:
    int fd_ = -1;
    std::string inbox_;
};

}  // namespace cooking::server
