#include "cooking/thermo_sim.hpp"

#include "cooking/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace cooking::sim {

void ThermalParams::validate() const {
    if (!(k_per_s > 0)) throw ValidationError("heating coefficient k must be positive");
    if (!(noise_sigma_f >= 0)) throw ValidationError("noise sigma must be non-negative");
    if (!std::isfinite(t0_f) || !std::isfinite(env_f)) throw ValidationError("temperatures must be finite");
}

double closed_form(const ThermalParams& p, double t_s) {
    return p.env_f + (p.t0_f - p.env_f) * std::exp(-p.k_per_s * t_s);
}

std::optional<double> crossing_time(const ThermalParams& p, double temp_f) {
    const double start_gap = p.t0_f - p.env_f;
    const double end_gap = temp_f - p.env_f;
    if (start_gap == 0) return temp_f == p.t0_f ? std::optional<double>(0.0) : std::nullopt;
    const double ratio = end_gap / start_gap;
    if (!(ratio > 0) || ratio > 1) return ratio == 1 ? std::optional<double>(0.0) : std::nullopt;
    return -std::log(ratio) / p.k_per_s;
}

DeviceState initial_state(std::string device_id, const ThermalParams& params, std::int64_t start_ms) {
    DeviceState s;
    s.device_id = std::move(device_id);
    s.current_f = params.t0_f;
    s.core_f = params.t0_f;
    s.sim_clock_ms = start_ms;
    return s;
}

DeviceState step(const DeviceState& state, const ThermalParams& params, double dt_s, std::mt19937_64& rng) {
    DeviceState next = state;
    next.core_f = params.env_f + (state.core_f - params.env_f) * std::exp(-params.k_per_s * dt_s);
    next.current_f = next.core_f;
    if (params.noise_sigma_f > 0) {
        std::normal_distribution<double> noise(0.0, params.noise_sigma_f);
        next.current_f += noise(rng);
    }
    next.sim_clock_ms = state.sim_clock_ms + static_cast<std::int64_t>(std::llround(dt_s * 1000.0));
    if (next.timer_running) next.elapsed_s += dt_s;
    if (next.alarm_armed && !next.alarm_fired && next.current_f >= next.target_f) next.alarm_fired = true;
    return next;
}

DeviceState apply_command(DeviceState state, const wire::DeviceCommand& cmd) {
    using Kind = wire::DeviceCommand::Kind;
    switch (cmd.kind) {
        case Kind::TargetUp:
            state.target_f = std::clamp(state.target_f + 1.0, kMinSettableF, kMaxSettableF);
            break;
        case Kind::TargetDown:
            state.target_f = std::clamp(state.target_f - 1.0, kMinSettableF, kMaxSettableF);
            break;
        case Kind::SetTarget:
            if (!settable(cmd.temp_f))
                throw OutOfRangeError("target " + std::to_string(cmd.temp_f) + " outside [32, 572] F");
            state.target_f = cmd.temp_f;
            break;
        case Kind::StartTimer:
            state.timer_running = true;
            state.elapsed_s = 0;
            break;
        case Kind::ArmAlarm:
            state.alarm_armed = true;
            state.alarm_fired = false;
            break;
        case Kind::Disarm:
            state.alarm_armed = false;
            state.alarm_fired = false;
            break;
    }
    return state;
}

Simulator::Simulator(std::string device_id, ThermalParams params, const RunOptions& options)
    : params_(params), options_(options), rng_(params.seed) {
    params_.validate();
    if (!(options_.cadence_s > 0)) throw ValidationError("cadence must be positive");
    state_ = initial_state(std::move(device_id), params_, options_.start_ms);
    if (!settable(options_.initial_target_f)) throw OutOfRangeError("initial target outside [32, 572] F");
    state_.target_f = options_.initial_target_f;
}

void Simulator::handle_line(const std::string& line, DeviceLink& link) {
    std::variant<wire::DeviceCommand, wire::UnknownCommand> decoded;
    try {
        decoded = wire::decode_command(line);
    } catch (const ParseError&) {
        link.send_line(wire::encode_error("bad_cmd"));
        return;
    }
    if (std::holds_alternative<wire::UnknownCommand>(decoded)) {
        link.send_line(wire::encode_error("unknown_cmd"));
        return;
    }
    try {
        state_ = apply_command(state_, std::get<wire::DeviceCommand>(decoded));
    } catch (const OutOfRangeError&) {
        link.send_line(wire::encode_error("out_of_range"));
    }
}

TemperatureSample Simulator::tick(DeviceLink& link) {
    while (auto line = link.poll_line()) handle_line(*line, link);
    state_ = step(state_, params_, options_.cadence_s, rng_);
    return TemperatureSample{state_.device_id, ++seq_, state_.sim_clock_ms, wire::round_tenth(state_.current_f)};
}

DeviceState run(const std::string& device_id, const ThermalParams& params, const RunOptions& options,
                DeviceLink& link) {
    Simulator sim(device_id, params, options);
    const auto count = static_cast<std::int64_t>(std::floor(options.duration_s / options.cadence_s + 1e-9));
    link.send_line(wire::encode_hello(device_id));
    for (std::int64_t i = 0; i < count; ++i) {
        if (options.realtime && i > 0)
            std::this_thread::sleep_for(std::chrono::duration<double>(options.cadence_s));
        link.send_line(wire::encode_sample(sim.tick(link)));
    }
    // Late commands still land in the final state.
    while (auto line = link.poll_line()) sim.handle_line(*line, link);
    return sim.state();
}

}  // namespace cooking::sim
