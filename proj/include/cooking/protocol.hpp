#pragma once

// Line-oriented JSON protocol between a probe and the control plane. Every
// message is one flat JSON object on one line; the encoders below return
// the line without its terminating '\n'.

#include <string>
#include <string_view>
#include <variant>

#include "cooking/sample.hpp"

namespace cooking::wire {

struct DeviceCommand {
    enum class Kind { TargetUp, TargetDown, StartTimer, SetTarget, ArmAlarm, Disarm };
    Kind kind = Kind::TargetUp;
    double temp_f = 0;  // SetTarget only

    static DeviceCommand set_target(double t) { return {Kind::SetTarget, t}; }
    static DeviceCommand of(Kind k) { return {k, 0}; }

    friend bool operator==(const DeviceCommand&, const DeviceCommand&) = default;
};

struct UnknownCommand {
    std::string cmd;
};

struct Hello {
    std::string device_id;
};

/// `{"err":...}` reply sent by a device.
struct DeviceError {
    std::string code;
};

using DeviceLine = std::variant<Hello, TemperatureSample, DeviceError>;

/// Rounds to the one-decimal resolution used on the wire.
double round_tenth(double temp_f);

std::string encode_sample(const TemperatureSample& sample);
std::string encode_hello(std::string_view device_id);
std::string encode_command(const DeviceCommand& cmd);
std::string encode_error(std::string_view code);

/// Parses a telemetry line. Throws ParseError unless the line is a JSON
/// object carrying device_id (string), seq and t_ms (integers) and temp_f
/// (number). Extra keys are ignored.
TemperatureSample decode_sample(std::string_view line);

/// Classifies a line arriving from a device.
DeviceLine decode_device_line(std::string_view line);

/// Parses a line arriving at a device. Unrecognized `cmd` values come back
/// as UnknownCommand; malformed lines throw ParseError.
std::variant<DeviceCommand, UnknownCommand> decode_command(std::string_view line);

}  // namespace cooking::wire
