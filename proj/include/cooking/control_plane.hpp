#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "cooking/predictor.hpp"
#include "cooking/protocol.hpp"
#include "cooking/sample.hpp"

namespace cooking::control {

/// Static access-token to device mapping. Lookups are exact-match.
class TokenRegistry {
public:
    /// Throws ValidationError on an empty or already registered token.
    void add(const std::string& token, const std::string& device_id);
    /// Throws AuthorizationError for unknown or empty tokens.
    const std::string& resolve(const std::string& token) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Fixed-capacity FIFO of samples in arrival order.
class SampleRing {
public:
    explicit SampleRing(std::size_t capacity);
    void push(const TemperatureSample& sample);
    const std::deque<TemperatureSample>& samples() const { return samples_; }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::deque<TemperatureSample> samples_;
};

/// Append-only log of accepted samples in telemetry wire format.
class TelemetryLog {
public:
    /// Opens (creating or appending) the log. Throws Error when unwritable.
    explicit TelemetryLog(const std::string& path);
    void append(const TemperatureSample& sample);
    void flush();
    const std::string& path() const { return path_; }

    /// Reads every parseable line of a log file, in order.
    static std::vector<TemperatureSample> read(const std::string& path);

private:
    std::string path_;
    std::mutex mutex_;
    std::ofstream out_;
};

enum class ConnectionState { Connected, Stale, Disconnected };

std::string_view to_string(ConnectionState state);

struct Alarm {
    enum class Mode { AtTarget, AtTemp };
    Mode mode = Mode::AtTarget;
    double temp_f = 0;  // AtTemp only
    bool armed = false;
    bool fired = false;
};

struct AlarmEvent {
    std::string device_id;
    double threshold_f = 0;
    TemperatureSample sample;
};

struct SampleEvent {
    TemperatureSample sample;
};

using Event = std::variant<SampleEvent, AlarmEvent>;

/// Bounded queue feeding one subscriber. Producers never block: when the
/// subscriber falls behind, the oldest events are discarded.
class EventQueue {
public:
    explicit EventQueue(std::size_t limit = 4096) : limit_(limit) {}

    void push(Event event);
    /// Waits up to timeout for an event.
    std::optional<Event> pop(std::chrono::milliseconds timeout);
    std::vector<Event> drain();
    void close();
    bool closed() const;
    std::size_t discarded() const;

private:
    std::size_t limit_;
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Event> events_;
    std::size_t discarded_ = 0;
    bool closed_ = false;
};

struct ServiceConfig {
    std::size_t ring_capacity = 10000;
    double staleness_timeout_s = 10.0;
    std::string log_path;  // empty disables the log
    predict::PredictorConfig predictor;
};

struct Reading {
    double temp_f = 0;
    std::int64_t t_ms = 0;
    bool stale = false;
};

struct TargetInfo {
    std::optional<double> target_f;
    bool pending = false;  // recorded but not yet delivered to the device
};

struct DeviceSummary {
    std::string device_id;
    ConnectionState state = ConnectionState::Disconnected;
};

struct IngestResult {
    bool accepted = false;
    std::optional<AlarmEvent> alarm;
};

/// Sends one command line to a connected device; returns false on failure.
using CommandSender = std::function<bool(const std::string& line)>;

/// Millisecond clock used for staleness. Wall clock by default; scenarios
/// install the simulated clock.
using Clock = std::function<std::int64_t()>;

Clock steady_clock_ms();

/// The control-plane state: sessions, telemetry rings, alarms, event fan-out.
///
/// Each device's state is guarded by its own mutex. Only that device's
/// connection ingests samples; API reads copy what they need under the
/// lock, so they see a consistent snapshot. Subscribers receive events
/// through their own queues and never block ingest.
class Service {
public:
    explicit Service(ServiceConfig config, Clock clock = steady_clock_ms());
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    const ServiceConfig& config() const { return config_; }
    TokenRegistry& tokens() { return tokens_; }
    const TokenRegistry& tokens() const { return tokens_; }
    /// Throws AuthorizationError.
    std::string resolve_token(const std::string& token) const;

    /// Creates an empty, disconnected session if none exists.
    void register_device(const std::string& device_id);
    bool has_device(const std::string& device_id) const;
    std::vector<DeviceSummary> devices() const;

    /// Marks the device connected and installs its command channel. Any
    /// deferred target is forwarded. Returns a connection id for disconnect().
    std::uint64_t connect(const std::string& device_id, CommandSender sender);
    /// Ignored when the connection id is no longer current.
    void disconnect(const std::string& device_id, std::uint64_t connection);

    /// Stores a sample. Out-of-order or duplicate seq values are dropped and
    /// counted. Fires the alarm on the first sample at or above threshold.
    IngestResult ingest(const TemperatureSample& sample);
    /// Parses and ingests one telemetry line; malformed lines are dropped and
    /// counted against device_id.
    IngestResult ingest_line(const std::string& device_id, std::string_view line);
    std::uint64_t dropped(const std::string& device_id) const;

    // Queries throw NotFoundError for unknown devices.
    std::optional<Reading> current_temperature(const std::string& device_id) const;
    ConnectionState connection_state(const std::string& device_id) const;
    /// Throws OutOfRangeError outside [32, 572] °F.
    TargetInfo set_target(const std::string& device_id, double temp_f);
    TargetInfo target(const std::string& device_id) const;
    predict::Prediction prediction(const std::string& device_id) const;
    /// Throws StateError when at_target is requested with no target set, and
    /// OutOfRangeError for an unsettable at_temp threshold.
    Alarm arm_alarm(const std::string& device_id, Alarm::Mode mode, double temp_f = 0);
    std::optional<Alarm> alarm(const std::string& device_id) const;
    std::vector<TemperatureSample> history(const std::string& device_id, std::int64_t since_t_ms) const;
    predict::SampleWindow window(const std::string& device_id) const;

    std::shared_ptr<EventQueue> subscribe();
    void unsubscribe(const std::shared_ptr<EventQueue>& queue);

    /// Flushes the telemetry log, if any.
    void flush();

private:
    struct Device;

    Device& device(const std::string& device_id) const;
    Device& get_or_create(const std::string& device_id);
    ConnectionState state_locked(const Device& d) const;
    void publish(const Event& event);

    ServiceConfig config_;
    Clock clock_;
    TokenRegistry tokens_;
    std::unique_ptr<TelemetryLog> log_;

    mutable std::shared_mutex devices_mutex_;
    std::map<std::string, std::unique_ptr<Device>> devices_;

    std::mutex subscribers_mutex_;
    std::vector<std::shared_ptr<EventQueue>> subscribers_;

    std::atomic<std::uint64_t> next_connection_{1};
};

/// Replays a telemetry log through ingest, returning the number of accepted samples.
std::size_t replay_log(Service& service, const std::string& path);

/// Line protocol state machine for one device connection: the first line
/// must be a hello, every following line is telemetry. Shared by the TCP
/// listener and in-process links.
class DeviceConnection {
public:
    DeviceConnection(Service& service, CommandSender sender);
    ~DeviceConnection();

    DeviceConnection(const DeviceConnection&) = delete;
    DeviceConnection& operator=(const DeviceConnection&) = delete;

    /// Returns false when the connection must be closed (bad hello).
    bool on_line(std::string_view line);
    const std::optional<std::string>& device_id() const { return device_id_; }
    void close();

private:
    Service& service_;
    CommandSender sender_;
    std::optional<std::string> device_id_;
    std::uint64_t connection_ = 0;
};

}  // namespace cooking::control
