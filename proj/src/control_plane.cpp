#include "cooking/control_plane.hpp"

#include "cooking/error.hpp"
#include "text_util.hpp"

#include <json.hpp>

#include <algorithm>

namespace cooking::control {

// TokenRegistry

void TokenRegistry::add(const std::string& token, const std::string& device_id) {
    if (token.empty()) throw ValidationError("empty access token");
    if (device_id.empty()) throw ValidationError("token '" + token + "' maps to an empty device id");
    if (!entries_.emplace(token, device_id).second) throw ValidationError("duplicate access token");
}

const std::string& TokenRegistry::resolve(const std::string& token) const {
    auto it = token.empty() ? entries_.end() : entries_.find(token);
    if (it == entries_.end()) throw AuthorizationError("unknown access token");
    return it->second;
}

// SampleRing

SampleRing::SampleRing(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ValidationError("ring capacity must be positive");
}

void SampleRing::push(const TemperatureSample& sample) {
    samples_.push_back(sample);
    if (samples_.size() > capacity_) samples_.pop_front();
}

// TelemetryLog

TelemetryLog::TelemetryLog(const std::string& path) : path_(path), out_(path, std::ios::app) {
    if (!out_) throw Error("cannot open telemetry log " + path);
}

void TelemetryLog::append(const TemperatureSample& sample) {
    std::lock_guard lock(mutex_);
    // Full precision, unlike the wire's tenths, so replay reproduces the ring exactly.
    out_ << nlohmann::json{{"device_id", sample.device_id}, {"seq", sample.seq}, {"t_ms", sample.t_ms},
                           {"temp_f", sample.temp_f}}
                .dump()
         << '\n';
    out_.flush();
}

void TelemetryLog::flush() {
    std::lock_guard lock(mutex_);
    out_.flush();
}

std::vector<TemperatureSample> TelemetryLog::read(const std::string& path) {
    std::vector<TemperatureSample> out;
    auto text = detail::read_file(path);
    for (auto line : detail::split_lines(text)) {
        if (detail::trim(line).empty()) continue;
        try {
            out.push_back(wire::decode_sample(line));
        } catch (const ParseError&) {
            // A torn final line after a crash is skipped.
        }
    }
    return out;
}

std::string_view to_string(ConnectionState state) {
    switch (state) {
        case ConnectionState::Connected: return "connected";
        case ConnectionState::Stale: return "stale";
        case ConnectionState::Disconnected: return "disconnected";
    }
    return "disconnected";
}

// EventQueue

void EventQueue::push(Event event) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        events_.push_back(std::move(event));
        if (events_.size() > limit_) {
            events_.pop_front();
            ++discarded_;
        }
    }
    ready_.notify_one();
}

std::optional<Event> EventQueue::pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    ready_.wait_for(lock, timeout, [this] { return !events_.empty() || closed_; });
    if (events_.empty()) return std::nullopt;
    Event e = std::move(events_.front());
    events_.pop_front();
    return e;
}

std::vector<Event> EventQueue::drain() {
    std::lock_guard lock(mutex_);
    std::vector<Event> out(std::make_move_iterator(events_.begin()), std::make_move_iterator(events_.end()));
    events_.clear();
    return out;
}

void EventQueue::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    ready_.notify_all();
}

bool EventQueue::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

std::size_t EventQueue::discarded() const {
    std::lock_guard lock(mutex_);
    return discarded_;
}

Clock steady_clock_ms() {
    return [] {
        using namespace std::chrono;
        return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
    };
}

// Service

struct Service::Device {
    Device(std::string device_id, std::size_t ring_capacity, std::size_t window_capacity)
        : id(std::move(device_id)), ring(ring_capacity), window(window_capacity) {}

    mutable std::mutex mutex;
    std::string id;
    SampleRing ring;
    predict::SampleWindow window;

    bool connected = false;
    std::uint64_t connection = 0;
    CommandSender sender;
    std::int64_t last_arrival_ms = 0;

    std::optional<double> target_f;
    bool target_pending = false;
    std::optional<Alarm> alarm;

    std::optional<std::int64_t> last_seq;
    std::optional<std::int64_t> last_t_ms;
    std::uint64_t dropped = 0;
};

Service::Service(ServiceConfig config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {
    if (config_.ring_capacity == 0) throw ValidationError("ring_capacity must be positive");
    if (!(config_.staleness_timeout_s > 0)) throw ValidationError("staleness_timeout_s must be positive");
    if (!config_.log_path.empty()) log_ = std::make_unique<TelemetryLog>(config_.log_path);
}

Service::~Service() {
    flush();
    std::lock_guard lock(subscribers_mutex_);
    for (auto& q : subscribers_) q->close();
}

std::string Service::resolve_token(const std::string& token) const { return tokens_.resolve(token); }

Service::Device& Service::device(const std::string& device_id) const {
    std::shared_lock lock(devices_mutex_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) throw NotFoundError("unknown device '" + device_id + "'");
    return *it->second;
}

Service::Device& Service::get_or_create(const std::string& device_id) {
    {
        std::shared_lock lock(devices_mutex_);
        if (auto it = devices_.find(device_id); it != devices_.end()) return *it->second;
    }
    std::unique_lock lock(devices_mutex_);
    auto& slot = devices_[device_id];
    if (!slot) slot = std::make_unique<Device>(device_id, config_.ring_capacity, config_.predictor.capacity);
    return *slot;
}

void Service::register_device(const std::string& device_id) {
    if (device_id.empty()) throw ValidationError("empty device id");
    get_or_create(device_id);
}

bool Service::has_device(const std::string& device_id) const {
    std::shared_lock lock(devices_mutex_);
    return devices_.count(device_id) > 0;
}

ConnectionState Service::state_locked(const Device& d) const {
    if (!d.connected) return ConnectionState::Disconnected;
    const auto timeout_ms = static_cast<std::int64_t>(config_.staleness_timeout_s * 1000.0);
    if (clock_() - d.last_arrival_ms > timeout_ms) return ConnectionState::Stale;
    return ConnectionState::Connected;
}

std::vector<DeviceSummary> Service::devices() const {
    std::vector<DeviceSummary> out;
    std::shared_lock lock(devices_mutex_);
    for (const auto& [id, d] : devices_) {
        std::lock_guard dl(d->mutex);
        out.push_back({id, state_locked(*d)});
    }
    return out;
}

std::uint64_t Service::connect(const std::string& device_id, CommandSender sender) {
    auto& d = get_or_create(device_id);
    std::lock_guard lock(d.mutex);
    d.connected = true;
    d.connection = next_connection_++;
    d.sender = std::move(sender);
    d.last_arrival_ms = clock_();
    if (d.target_pending && d.target_f && d.sender)
        d.target_pending = !d.sender(wire::encode_command(wire::DeviceCommand::set_target(*d.target_f)));
    return d.connection;
}

void Service::disconnect(const std::string& device_id, std::uint64_t connection) {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    if (d.connection != connection) return;
    d.connected = false;
    d.sender = nullptr;
}

IngestResult Service::ingest(const TemperatureSample& sample) {
    if (sample.device_id.empty()) return {};
    auto& d = get_or_create(sample.device_id);
    IngestResult result;
    {
        std::lock_guard lock(d.mutex);
        if ((d.last_seq && sample.seq <= *d.last_seq) || (d.last_t_ms && sample.t_ms < *d.last_t_ms)) {
            ++d.dropped;
            return result;
        }
        d.window.push(sample);
        d.ring.push(sample);
        if (log_) log_->append(sample);
        d.last_seq = sample.seq;
        d.last_t_ms = sample.t_ms;
        d.last_arrival_ms = clock_();
        result.accepted = true;

        if (d.alarm && d.alarm->armed && !d.alarm->fired) {
            std::optional<double> threshold =
                d.alarm->mode == Alarm::Mode::AtTemp ? std::optional<double>(d.alarm->temp_f) : d.target_f;
            if (threshold && sample.temp_f >= *threshold) {
                d.alarm->fired = true;
                result.alarm = AlarmEvent{d.id, *threshold, sample};
            }
        }
    }
    publish(SampleEvent{sample});
    if (result.alarm) publish(*result.alarm);
    return result;
}

IngestResult Service::ingest_line(const std::string& device_id, std::string_view line) {
    TemperatureSample sample;
    try {
        sample = wire::decode_sample(line);
    } catch (const ParseError&) {
        auto& d = get_or_create(device_id);
        std::lock_guard lock(d.mutex);
        ++d.dropped;
        return {};
    }
    if (sample.device_id != device_id) {
        // A connection may only speak for the device it said hello as.
        auto& d = get_or_create(device_id);
        std::lock_guard lock(d.mutex);
        ++d.dropped;
        return {};
    }
    return ingest(sample);
}

std::uint64_t Service::dropped(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    return d.dropped;
}

std::optional<Reading> Service::current_temperature(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    if (d.ring.samples().empty()) return std::nullopt;
    const auto& last = d.ring.samples().back();
    return Reading{last.temp_f, last.t_ms, state_locked(d) != ConnectionState::Connected};
}

ConnectionState Service::connection_state(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    return state_locked(d);
}

TargetInfo Service::set_target(const std::string& device_id, double temp_f) {
    if (!settable(temp_f)) throw OutOfRangeError("target temperature must be between 32 and 572 F");
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    d.target_f = temp_f;
    d.target_pending = true;
    if (d.connected && d.sender)
        d.target_pending = !d.sender(wire::encode_command(wire::DeviceCommand::set_target(temp_f)));
    return {d.target_f, d.target_pending};
}

TargetInfo Service::target(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    return {d.target_f, d.target_pending};
}

predict::Prediction Service::prediction(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    if (!d.target_f) return predict::Prediction::indeterminate();
    return predict::predict(d.window, *d.target_f, config_.predictor);
}

Alarm Service::arm_alarm(const std::string& device_id, Alarm::Mode mode, double temp_f) {
    auto& d = device(device_id);
    if (mode == Alarm::Mode::AtTemp && !settable(temp_f))
        throw OutOfRangeError("alarm temperature must be between 32 and 572 F");
    std::lock_guard lock(d.mutex);
    if (mode == Alarm::Mode::AtTarget && !d.target_f) throw StateError("no target set");
    Alarm alarm;
    alarm.mode = mode;
    alarm.temp_f = mode == Alarm::Mode::AtTemp ? temp_f : *d.target_f;
    alarm.armed = true;
    alarm.fired = false;
    d.alarm = alarm;
    // Mirror target alarms on the probe so its own buzzer rings too.
    if (mode == Alarm::Mode::AtTarget && d.connected && d.sender)
        d.sender(wire::encode_command(wire::DeviceCommand::of(wire::DeviceCommand::Kind::ArmAlarm)));
    return alarm;
}

std::optional<Alarm> Service::alarm(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    return d.alarm;
}

std::vector<TemperatureSample> Service::history(const std::string& device_id, std::int64_t since_t_ms) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    const auto& ring = d.ring.samples();
    // Ring is in arrival order and t_ms never decreases, so the result is a suffix.
    auto first = std::partition_point(ring.begin(), ring.end(),
                                      [since_t_ms](const TemperatureSample& s) { return s.t_ms < since_t_ms; });
    return {first, ring.end()};
}

predict::SampleWindow Service::window(const std::string& device_id) const {
    auto& d = device(device_id);
    std::lock_guard lock(d.mutex);
    return d.window;
}

std::shared_ptr<EventQueue> Service::subscribe() {
    auto q = std::make_shared<EventQueue>();
    std::lock_guard lock(subscribers_mutex_);
    subscribers_.push_back(q);
    return q;
}

void Service::unsubscribe(const std::shared_ptr<EventQueue>& queue) {
    std::lock_guard lock(subscribers_mutex_);
    std::erase(subscribers_, queue);
    queue->close();
}

void Service::publish(const Event& event) {
    std::lock_guard lock(subscribers_mutex_);
    for (auto& q : subscribers_) q->push(event);
}

void Service::flush() {
    if (log_) log_->flush();
}

std::size_t replay_log(Service& service, const std::string& path) {
    std::size_t accepted = 0;
    for (const auto& s : TelemetryLog::read(path))
        if (service.ingest(s).accepted) ++accepted;
    return accepted;
}

// DeviceConnection

DeviceConnection::DeviceConnection(Service& service, CommandSender sender)
    : service_(service), sender_(std::move(sender)) {}

DeviceConnection::~DeviceConnection() { close(); }

bool DeviceConnection::on_line(std::string_view line) {
    auto text = detail::trim(line);
    if (text.empty()) return true;
    if (!device_id_) {
        try {
            auto decoded = wire::decode_device_line(text);
            if (auto* hello = std::get_if<wire::Hello>(&decoded)) {
                device_id_ = hello->device_id;
                connection_ = service_.connect(*device_id_, sender_);
                return true;
            }
        } catch (const ParseError&) {
        }
        return false;
    }
    if (text.find("\"err\"") != std::string_view::npos) {
        try {
            auto decoded = wire::decode_device_line(text);
            if (std::holds_alternative<wire::DeviceError>(decoded)) return true;
        } catch (const ParseError&) {
        }
    }
    service_.ingest_line(*device_id_, text);
    return true;
}

void DeviceConnection::close() {
    if (device_id_ && connection_) service_.disconnect(*device_id_, connection_);
    connection_ = 0;
}

}  // namespace cooking::control
