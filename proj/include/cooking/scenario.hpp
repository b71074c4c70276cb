#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cooking/control_plane.hpp"
#include "cooking/doneness.hpp"
#include "cooking/intent.hpp"
#include "cooking/thermo_sim.hpp"

namespace cooking::scenario {

struct Action {
    enum class Kind { Say, Device, Get, ExpectAlarms };

    double at_s = 0;
    Kind kind = Kind::Say;
    std::string text;  // utterance, device command name, or API path
    std::optional<double> temp_f;  // set_target device command
    std::optional<std::string> expect_speech;
    std::optional<nlohmann::json> expect;  // subset of the response body
    std::optional<int> expect_status;
    std::optional<int> expect_alarms;
    double tolerance = 1e-9;
};

struct Scenario {
    std::string name;
    std::string device_id = "probe-1";
    std::string token = "scenario-token";
    sim::ThermalParams thermal;
    double cadence_s = 1.0;
    double duration_s = 0;  // 0: run until the last action
    double staleness_timeout_s = 0;  // 0: max(10 s, 2 cadences)
    double initial_target_f = 145.0;
    std::vector<Action> script;
};

/// Throws ParseError on malformed documents or decreasing action times.
Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::string& path);

struct StepResult {
    std::size_t index = 0;
    double at_s = 0;
    std::string description;
    bool checked = false;
    bool passed = true;
    std::string detail;
    int status = 0;
    nlohmann::json response;  // Get: body; Say: full utterance reply
};

struct Report {
    std::string name;
    std::vector<StepResult> steps;
    std::vector<TemperatureSample> samples;
    std::vector<control::AlarmEvent> alarms;
    sim::DeviceState final_state;

    bool passed() const;
};

/// Device link that feeds lines straight into a control-plane connection.
/// Commands from the control plane queue up until the simulator polls.
class LoopbackLink : public sim::DeviceLink {
public:
    explicit LoopbackLink(control::Service& service);

    void send_line(const std::string& line) override;
    std::optional<std::string> poll_line() override;

private:
    std::mutex mutex_;
    std::deque<std::string> inbox_;
    control::DeviceConnection connection_;
};

/// Runs the scenario against an in-process control plane (HTTP bound to an
/// ephemeral loopback port) and simulator, all on a simulated clock.
Report run(const Scenario& scenario, const kb::DonenessTable& table, const intent::InteractionModel& model);

/// True when every key of `expected` is present in `actual` with an equal
/// value; numbers compare within tolerance. Appends a diff on mismatch.
bool json_subset(const nlohmann::json& expected, const nlohmann::json& actual, double tolerance, std::string& diff,
                 const std::string& path = "");

}  // namespace cooking::scenario
