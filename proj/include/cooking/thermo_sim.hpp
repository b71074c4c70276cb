#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cooking/protocol.hpp"
#include "cooking/sample.hpp"

namespace cooking::sim {

/// Newtonian heating toward a constant source temperature.
struct ThermalParams {
    double t0_f = 70.0;
    double env_f = 225.0;
    double k_per_s = 0.002;
    double noise_sigma_f = 0.0;
    std::uint64_t seed = 1;

    /// Throws ValidationError when k_per_s <= 0 or noise_sigma_f < 0.
    void validate() const;
};

/// Noise-free temperature after t_s seconds: env + (t0 - env) * exp(-k t).
double closed_form(const ThermalParams& params, double t_s);

/// Seconds until the noise-free curve reaches temp_f, or nullopt when it never does.
std::optional<double> crossing_time(const ThermalParams& params, double temp_f);

/// Registers of the simulated probe.
struct DeviceState {
    std::string device_id;
    double current_f = 0;  // reported reading, noise included
    double core_f = 0;     // model temperature without noise
    double target_f = 145.0;
    double elapsed_s = 0;
    bool timer_running = false;
    bool alarm_armed = false;
    bool alarm_fired = false;
    std::int64_t sim_clock_ms = 0;

    friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

DeviceState initial_state(std::string device_id, const ThermalParams& params, std::int64_t start_ms = 0);

/// Advances the model by dt_s (> 0). Noise, when enabled, perturbs only the
/// reported reading.
DeviceState step(const DeviceState& state, const ThermalParams& params, double dt_s, std::mt19937_64& rng);

/// Button and remote commands. Target adjustments clamp to [32, 572] °F;
/// SetTarget outside that window throws OutOfRangeError.
DeviceState apply_command(DeviceState state, const wire::DeviceCommand& cmd);

/// Byte-stream connection from a device to the control plane.
class DeviceLink {
public:
    virtual ~DeviceLink() = default;
    /// Sends one line (without '\n'). Throws TransportError on failure.
    virtual void send_line(const std::string& line) = 0;
    /// Returns the next inbound line if one is already available.
    virtual std::optional<std::string> poll_line() = 0;
};

struct RunOptions {
    double cadence_s = 1.0;
    double duration_s = 60.0;
    std::int64_t start_ms = 0;
    double initial_target_f = 145.0;
    /// Sleep cadence_s of wall time between emissions.
    bool realtime = false;
};

/// Drives one simulated probe over a link: hello, then a sample per cadence.
class Simulator {
public:
    Simulator(std::string device_id, ThermalParams params, const RunOptions& options);

    const DeviceState& state() const { return state_; }
    const ThermalParams& params() const { return params_; }

    /// Applies one inbound command line, replying on the link when it is
    /// not understood.
    void handle_line(const std::string& line, DeviceLink& link);

    /// Drains pending inbound commands, steps by the cadence, and returns
    /// the next sample.
    TemperatureSample tick(DeviceLink& link);

    std::int64_t last_seq() const { return seq_; }

private:
    ThermalParams params_;
    RunOptions options_;
    DeviceState state_;
    std::mt19937_64 rng_;
    std::int64_t seq_ = 0;
};

/// Emits floor(duration / cadence) samples on the link and returns the final
/// state. Link failures propagate as TransportError.
DeviceState run(const std::string& device_id, const ThermalParams& params, const RunOptions& options,
                DeviceLink& link);

}  // namespace cooking::sim
