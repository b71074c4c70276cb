#include "cooking/scenario.hpp"

#include "cooking/assistant.hpp"
#include "cooking/error.hpp"
#include "cooking/server.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace cooking::scenario {

namespace {

using nlohmann::json;

double number_or(const json& obj, const char* key, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) throw ParseError(std::string("scenario field '") + key + "' must be a number");
    return it->get<double>();
}

std::string describe(const Action& a) {
    switch (a.kind) {
        case Action::Kind::Say: return "say \"" + a.text + "\"";
        case Action::Kind::Device: return "device " + a.text;
        case Action::Kind::Get: return "get " + a.text;
        case Action::Kind::ExpectAlarms: return "alarms == " + std::to_string(a.expect_alarms.value_or(0));
    }
    return {};
}

std::string format_time(double s) {
    std::ostringstream out;
    out << s;
    return out.str();
}

}  // namespace

Scenario parse_scenario(std::string_view document) {
    json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError("scenario must be a JSON object");

    Scenario sc;
    try {
        sc.name = doc.value("name", std::string("unnamed"));
        sc.device_id = doc.value("device_id", sc.device_id);
        sc.token = doc.value("token", sc.token);
        if (auto th = doc.find("thermal"); th != doc.end()) {
            if (!th->is_object()) throw ParseError("scenario field 'thermal' must be an object");
            sc.thermal.t0_f = number_or(*th, "t0_f", sc.thermal.t0_f);
            sc.thermal.env_f = number_or(*th, "env_f", sc.thermal.env_f);
            sc.thermal.k_per_s = number_or(*th, "k_per_s", sc.thermal.k_per_s);
            sc.thermal.noise_sigma_f = number_or(*th, "noise_sigma_f", sc.thermal.noise_sigma_f);
            sc.thermal.seed = th->value("seed", sc.thermal.seed);
        }
        sc.cadence_s = number_or(doc, "cadence_s", sc.cadence_s);
        sc.duration_s = number_or(doc, "duration_s", sc.duration_s);
        sc.staleness_timeout_s = number_or(doc, "staleness_timeout_s", sc.staleness_timeout_s);
        sc.initial_target_f = number_or(doc, "initial_target_f", sc.initial_target_f);

        for (const auto& item : doc.value("script", json::array())) {
            if (!item.is_object()) throw ParseError("script actions must be objects");
            Action a;
            a.at_s = number_or(item, "at_s", 0);
            a.tolerance = number_or(item, "tolerance", a.tolerance);
            if (item.contains("say")) {
                a.kind = Action::Kind::Say;
                a.text = item.at("say").get<std::string>();
                if (item.contains("expect_speech")) a.expect_speech = item.at("expect_speech").get<std::string>();
            } else if (item.contains("device")) {
                a.kind = Action::Kind::Device;
                a.text = item.at("device").get<std::string>();
                json probe = {{"cmd", a.text}, {"temp_f", item.value("temp_f", 0.0)}};
                if (std::holds_alternative<wire::UnknownCommand>(wire::decode_command(probe.dump())))
                    throw ParseError("unknown device command '" + a.text + "'");
                if (item.contains("temp_f")) a.temp_f = item.at("temp_f").get<double>();
            } else if (item.contains("get")) {
                a.kind = Action::Kind::Get;
                a.text = item.at("get").get<std::string>();
                if (item.contains("expect")) a.expect = item.at("expect");
                if (item.contains("expect_status")) a.expect_status = item.at("expect_status").get<int>();
            } else if (item.contains("expect_alarms")) {
                a.kind = Action::Kind::ExpectAlarms;
                a.expect_alarms = item.at("expect_alarms").get<int>();
            } else {
                throw ParseError("action needs one of say, device, get, expect_alarms");
            }
            if (!sc.script.empty() && a.at_s < sc.script.back().at_s)
                throw ParseError("action times must be non-decreasing (at_s " + format_time(a.at_s) + ")");
            if (a.at_s < 0) throw ParseError("action time must be non-negative");
            sc.script.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    if (!(sc.cadence_s > 0)) throw ParseError("cadence_s must be positive");
    try {
        sc.thermal.validate();
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    return parse_scenario(text);
}

bool Report::passed() const {
    return std::all_of(steps.begin(), steps.end(), [](const StepResult& s) { return s.passed; });
}

LoopbackLink::LoopbackLink(control::Service& service)
    : connection_(service, [this](const std::string& line) {
          std::lock_guard lock(mutex_);
          inbox_.push_back(line);
          return true;
      }) {}

void LoopbackLink::send_line(const std::string& line) {
    if (!connection_.on_line(line)) throw TransportError("control plane closed the connection");
}

std::optional<std::string> LoopbackLink::poll_line() {
    std::lock_guard lock(mutex_);
    if (inbox_.empty()) return std::nullopt;
    auto line = std::move(inbox_.front());
    inbox_.pop_front();
    return line;
}

bool json_subset(const json& expected, const json& actual, double tolerance, std::string& diff, const std::string& path) {
    const std::string where = path.empty() ? "<body>" : path;
    if (expected.is_object()) {
        if (!actual.is_object()) {
            diff += where + ": expected object, got " + actual.dump() + "\n";
            return false;
        }
        bool ok = true;
        for (const auto& [key, value] : expected.items()) {
            auto it = actual.find(key);
            if (it == actual.end()) {
                diff += path + "." + key + ": missing\n";
                ok = false;
                continue;
            }
            ok = json_subset(value, *it, tolerance, diff, path + "." + key) && ok;
        }
        return ok;
    }
    if (expected.is_number() && actual.is_number()) {
        const double e = expected.get<double>(), a = actual.get<double>();
        if (std::fabs(e - a) <= tolerance) return true;
        diff += where + ": expected " + expected.dump() + ", got " + actual.dump() + "\n";
        return false;
    }
    if (expected == actual) return true;
    diff += where + ": expected " + expected.dump() + ", got " + actual.dump() + "\n";
    return false;
}

Report run(const Scenario& sc, const kb::DonenessTable& table, const intent::InteractionModel& model) {
    std::atomic<std::int64_t> now_ms{0};

    control::ServiceConfig config;
    config.staleness_timeout_s =
        sc.staleness_timeout_s > 0 ? sc.staleness_timeout_s : std::max(10.0, 2.0 * sc.cadence_s);
    control::Service service(config, [&now_ms] { return now_ms.load(); });
    service.tokens().add(sc.token, sc.device_id);
    service.register_device(sc.device_id);
    auto events = service.subscribe();

    server::ApiServer api(service, table);
    const int port = api.bind("127.0.0.1", 0);
    assistant::HttpControlPlaneApi client("127.0.0.1", port);
    assistant::Gateway gateway(model, client);
    api.set_gateway(&gateway);
    api.start();

    sim::RunOptions options;
    options.cadence_s = sc.cadence_s;
    options.initial_target_f = sc.initial_target_f;
    sim::Simulator simulator(sc.device_id, sc.thermal, options);
    LoopbackLink link(service);
    link.send_line(wire::encode_hello(sc.device_id));

    Report report;
    report.name = sc.name;

    double duration = sc.duration_s;
    if (!sc.script.empty()) duration = std::max(duration, sc.script.back().at_s);
    const auto total = static_cast<std::int64_t>(std::floor(duration / sc.cadence_s + 1e-9));
    std::int64_t emitted = 0;

    auto collect_events = [&] {
        for (auto& e : events->drain())
            if (auto* alarm = std::get_if<control::AlarmEvent>(&e)) report.alarms.push_back(*alarm);
    };
    auto emit_until = [&](double t_s) {
        while (emitted < total && static_cast<double>(emitted + 1) * sc.cadence_s <= t_s + 1e-9) {
            auto sample = simulator.tick(link);
            now_ms = sample.t_ms;
            link.send_line(wire::encode_sample(sample));
            report.samples.push_back(sample);
            ++emitted;
        }
        collect_events();
    };

    for (std::size_t i = 0; i < sc.script.size(); ++i) {
        const auto& action = sc.script[i];
        emit_until(action.at_s);
        now_ms = static_cast<std::int64_t>(std::llround(action.at_s * 1000.0));

        StepResult step;
        step.index = i;
        step.at_s = action.at_s;
        step.description = describe(action);

        switch (action.kind) {
            case Action::Kind::Say: {
                auto reply = client.post("/api/assistant/utterance",
                                         json{{"text", action.text}, {"token", sc.token}, {"session_id", sc.name}});
                step.status = reply.status;
                step.response = reply.body;
                if (action.expect_speech) {
                    step.checked = true;
                    const auto speech = reply.body.is_object() ? reply.body.value("speech", "") : "";
                    step.passed = speech == *action.expect_speech;
                    if (!step.passed)
                        step.detail = "expected \"" + *action.expect_speech + "\", got \"" + speech + "\"";
                }
                break;
            }
            case Action::Kind::Device: {
                json cmd = {{"cmd", action.text}};
                if (action.temp_f) cmd["temp_f"] = *action.temp_f;
                simulator.handle_line(cmd.dump(), link);
                break;
            }
            case Action::Kind::Get: {
                const std::string path = action.text.rfind('/', 0) == 0
                                             ? action.text
                                             : "/api/devices/" + assistant::url_encode(sc.device_id) + "/" + action.text;
                auto reply = client.get(path);
                step.status = reply.status;
                step.response = reply.body;
                if (action.expect_status || action.expect) {
                    step.checked = true;
                    const int want = action.expect_status.value_or(200);
                    if (reply.status != want) {
                        step.passed = false;
                        step.detail = "expected status " + std::to_string(want) + ", got " + std::to_string(reply.status);
                    } else if (action.expect) {
                        std::string diff;
                        step.passed = json_subset(*action.expect, reply.body, action.tolerance, diff);
                        step.detail = diff;
                    }
                }
                break;
            }
            case Action::Kind::ExpectAlarms: {
                collect_events();
                step.checked = true;
                const auto got = static_cast<int>(report.alarms.size());
                step.passed = got == *action.expect_alarms;
                if (!step.passed)
                    step.detail = "expected " + std::to_string(*action.expect_alarms) + " alarm(s), got " + std::to_string(got);
                break;
            }
        }
        report.steps.push_back(std::move(step));
    }
    emit_until(duration);

    api.stop();
    service.unsubscribe(events);
    report.final_state = simulator.state();
    return report;
}

}  // namespace cooking::scenario
