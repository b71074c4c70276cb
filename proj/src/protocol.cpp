#include "cooking/protocol.hpp"

#include "cooking/error.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

namespace cooking::wire {

namespace {

using nlohmann::json;

json parse_object(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed line: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("line is not a JSON object");
    return j;
}

std::string format_tenth(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.1f", round_tenth(v));
    return buf;
}

}  // namespace

double round_tenth(double temp_f) {
    double r = std::round(temp_f * 10.0) / 10.0;
    return r == 0.0 ? 0.0 : r;  // no "-0.0" on the wire
}

std::string encode_sample(const TemperatureSample& s) {
    return "{\"device_id\":" + json(s.device_id).dump() + ",\"seq\":" + std::to_string(s.seq) +
           ",\"t_ms\":" + std::to_string(s.t_ms) + ",\"temp_f\":" + format_tenth(s.temp_f) + "}";
}

std::string encode_hello(std::string_view device_id) {
    return "{\"hello\":" + json(std::string(device_id)).dump() + "}";
}

std::string encode_command(const DeviceCommand& cmd) {
    switch (cmd.kind) {
        case DeviceCommand::Kind::SetTarget:
            return "{\"cmd\":\"set_target\",\"temp_f\":" + format_tenth(cmd.temp_f) + "}";
        case DeviceCommand::Kind::ArmAlarm: return R"({"cmd":"arm_alarm"})";
        case DeviceCommand::Kind::Disarm: return R"({"cmd":"disarm"})";
        case DeviceCommand::Kind::TargetUp: return R"({"cmd":"target_up"})";
        case DeviceCommand::Kind::TargetDown: return R"({"cmd":"target_down"})";
        case DeviceCommand::Kind::StartTimer: return R"({"cmd":"start_timer"})";
    }
    return {};
}

std::string encode_error(std::string_view code) { return "{\"err\":" + json(std::string(code)).dump() + "}"; }

TemperatureSample decode_sample(std::string_view line) {
    auto j = parse_object(line);
    auto device = j.find("device_id");
    auto seq = j.find("seq");
    auto t_ms = j.find("t_ms");
    auto temp = j.find("temp_f");
    if (device == j.end() || !device->is_string()) throw ParseError("sample needs string device_id");
    if (seq == j.end() || !seq->is_number_integer()) throw ParseError("sample needs integer seq");
    if (t_ms == j.end() || !t_ms->is_number_integer()) throw ParseError("sample needs integer t_ms");
    if (temp == j.end() || !temp->is_number()) throw ParseError("sample needs numeric temp_f");

    TemperatureSample s;
    s.device_id = device->get<std::string>();
    s.seq = seq->get<std::int64_t>();
    s.t_ms = t_ms->get<std::int64_t>();
    s.temp_f = temp->get<double>();
    if (!std::isfinite(s.temp_f)) throw ParseError("temp_f is not finite");
    return s;
}

DeviceLine decode_device_line(std::string_view line) {
    auto j = parse_object(line);
    if (auto h = j.find("hello"); h != j.end()) {
        if (!h->is_string() || h->get<std::string>().empty()) throw ParseError("hello needs a device id");
        return Hello{h->get<std::string>()};
    }
    if (auto e = j.find("err"); e != j.end()) return DeviceError{e->is_string() ? e->get<std::string>() : e->dump()};
    return decode_sample(line);
}

std::variant<DeviceCommand, UnknownCommand> decode_command(std::string_view line) {
    auto j = parse_object(line);
    auto cmd = j.find("cmd");
    if (cmd == j.end() || !cmd->is_string()) throw ParseError("command needs string cmd");
    const auto name = cmd->get<std::string>();
    if (name == "set_target") {
        auto temp = j.find("temp_f");
        if (temp == j.end() || !temp->is_number()) throw ParseError("set_target needs numeric temp_f");
        return DeviceCommand::set_target(temp->get<double>());
    }
    if (name == "arm_alarm") return DeviceCommand::of(DeviceCommand::Kind::ArmAlarm);
    if (name == "disarm") return DeviceCommand::of(DeviceCommand::Kind::Disarm);
    if (name == "target_up") return DeviceCommand::of(DeviceCommand::Kind::TargetUp);
    if (name == "target_down") return DeviceCommand::of(DeviceCommand::Kind::TargetDown);
    if (name == "start_timer") return DeviceCommand::of(DeviceCommand::Kind::StartTimer);
    return UnknownCommand{name};
}

}  // namespace cooking::wire
