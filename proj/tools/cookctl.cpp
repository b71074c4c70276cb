// cookctl: run the control plane, simulated probes, typed utterances and
// scripted scenarios from the command line.
//
// Exit codes: 0 success, 1 assertion failure, 2 usage or config error,
// 3 transport error.

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <pthread.h>

#include "cooking/assistant.hpp"
#include "cooking/config.hpp"
#include "cooking/control_plane.hpp"
#include "cooking/doneness.hpp"
#include "cooking/error.hpp"
#include "cooking/intent.hpp"
#include "cooking/scenario.hpp"
#include "cooking/server.hpp"
#include "cooking/thermo_sim.hpp"

namespace {

using namespace cooking;

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kUsage = 2;
constexpr int kTransport = 3;

std::string data_file(const std::string& name) { return (std::filesystem::path(config::default_data_dir()) / name).string(); }

std::string bound_text(const std::optional<double>& b) {
    if (!b) return "open";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", *b);
    return buf;
}

int serve(const std::string& config_path) {
    config::ServerConfig cfg;
    kb::DonenessTable table;
    intent::InteractionModel model;
    try {
        cfg = config::load_config(config_path);
        table = kb::load_table_file(cfg.knowledge_path);
        model = intent::load_model_file(cfg.model_path);
    } catch (const Error& e) {
        std::cerr << "cookctl serve: " << e.what() << "\n";
        return kUsage;
    }

    // Block termination signals before any thread starts so sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        control::Service service(cfg.service);
        for (const auto& [token, device] : cfg.tokens) {
            service.tokens().add(token, device);
            service.register_device(device);
        }

        server::TelemetryListener telemetry(service);
        const int telemetry_port = telemetry.bind(cfg.telemetry_host, cfg.telemetry_port);
        server::ApiServer api(service, table);
        const int http_port = api.bind(cfg.http_host, cfg.http_port);

        const std::string self_host =
            (cfg.http_host == "0.0.0.0" || cfg.http_host.empty()) ? "127.0.0.1" : cfg.http_host;
        assistant::HttpControlPlaneApi client(self_host, http_port);
        assistant::Gateway gateway(model, client);
        api.set_gateway(&gateway);
        if (!cfg.ui_dir.empty() && !api.mount_ui(cfg.ui_dir)) {
            std::cerr << "cookctl serve: config field 'ui_dir': not a directory: " << cfg.ui_dir << "\n";
            return kUsage;
        }

        telemetry.start();
        api.start();
        std::cout << "http listening on " << cfg.http_host << ":" << http_port << "\n"
                  << "telemetry listening on " << cfg.telemetry_host << ":" << telemetry_port << std::endl;

        int sig = 0;
        sigwait(&signals, &sig);
        std::cout << "shutting down" << std::endl;
        api.stop();
        telemetry.stop();
        service.flush();
    } catch (const TransportError& e) {
        std::cerr << "cookctl serve: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "cookctl serve: " << e.what() << "\n";
        return kUsage;
    }
    return kOk;
}

struct SimulateArgs {
    std::string device = "probe-1";
    sim::ThermalParams params;
    double cadence_s = 1.0;
    double duration_s = 60.0;
    double target_f = 145.0;
    std::string server = "127.0.0.1:9099";
    bool realtime = false;
};

int simulate(const SimulateArgs& args) {
    std::pair<std::string, int> address;
    sim::RunOptions options;
    options.cadence_s = args.cadence_s;
    options.duration_s = args.duration_s;
    options.initial_target_f = args.target_f;
    options.realtime = args.realtime;
    try {
        address = server::parse_address(args.server);
        args.params.validate();
        if (!(args.cadence_s > 0)) throw ValidationError("cadence must be positive");
        if (!settable(args.target_f)) throw OutOfRangeError("target outside [32, 572] F");
    } catch (const Error& e) {
        std::cerr << "cookctl simulate: " << e.what() << "\n";
        return kUsage;
    }

    try {
        server::TcpDeviceLink link(address.first, address.second);
        auto state = sim::run(args.device, args.params, options, link);
        link.close();
        const auto samples = static_cast<long long>(std::floor(args.duration_s / args.cadence_s + 1e-9));
        std::printf("device %s: samples %lld, current %.1f F, target %.1f F, elapsed %.0f s, timer %s, "
                    "alarm %s%s, clock %lld ms\n",
                    state.device_id.c_str(), samples, state.current_f, state.target_f, state.elapsed_s,
                    state.timer_running ? "running" : "stopped", state.alarm_armed ? "armed" : "off",
                    state.alarm_fired ? " (fired)" : "", static_cast<long long>(state.sim_clock_ms));
    } catch (const TransportError& e) {
        std::cerr << "cookctl simulate: " << e.what() << "\n";
        return kTransport;
    }
    return kOk;
}

int say(const std::string& text, const std::string& token, const std::string& server_addr) {
    std::pair<std::string, int> address;
    try {
        address = server::parse_address(server_addr);
    } catch (const Error& e) {
        std::cerr << "cookctl say: " << e.what() << "\n";
        return kUsage;
    }
    try {
        assistant::HttpControlPlaneApi api(address.first, address.second);
        auto reply = api.post("/api/assistant/utterance", {{"text", text}, {"token", token}, {"session_id", "cookctl"}});
        if (reply.status != 200 || !reply.body.is_object() || !reply.body.contains("speech")) {
            std::cerr << "cookctl say: server answered " << reply.status << "\n";
            return kTransport;
        }
        std::cout << reply.body["speech"].get<std::string>() << std::endl;
    } catch (const TransportError& e) {
        std::cerr << "cookctl say: " << e.what() << "\n";
        return kTransport;
    }
    return kOk;
}

int run_scenario(const std::string& path) {
    scenario::Scenario sc;
    kb::DonenessTable table;
    intent::InteractionModel model;
    try {
        sc = scenario::load_scenario(path);
        table = kb::load_table_file(data_file("doneness.kb"));
        model = intent::load_model_file(data_file("interaction_model.json"));
    } catch (const Error& e) {
        std::cerr << "cookctl scenario: " << e.what() << "\n";
        return kUsage;
    }

    scenario::Report report;
    try {
        report = scenario::run(sc, table, model);
    } catch (const TransportError& e) {
        std::cerr << "cookctl scenario: " << e.what() << "\n";
        return kTransport;
    }

    std::size_t checked = 0, failed = 0;
    for (const auto& step : report.steps) {
        if (!step.checked) continue;
        ++checked;
        std::cout << (step.passed ? "PASS" : "FAIL") << "  t=" << step.at_s << "s  " << step.description << "\n";
        if (!step.passed) {
            ++failed;
            std::cout << "      " << step.detail << "\n";
        }
    }
    std::cout << report.name << ": " << (checked - failed) << "/" << checked << " assertions passed, "
              << report.samples.size() << " samples, " << report.alarms.size() << " alarm(s)" << std::endl;
    return failed == 0 ? kOk : kAssertionFailed;
}

int kb_classify(const std::string& kb_path, const std::string& category, double temp_f) {
    try {
        auto table = kb::load_table_file(kb_path);
        auto id = kb::category_from_string(category);
        auto result = table.classify(id, temp_f);
        if (auto* below = std::get_if<kb::BelowRange>(&result)) {
            std::cout << "below range (lowest " << bound_text(below->lowest_f) << " F)" << std::endl;
        } else {
            const auto& e = std::get<kb::DonenessEntry>(result);
            std::cout << e.name << " [" << bound_text(e.lower_f) << ", " << bound_text(e.upper_f)
                      << ") F: " << e.description << std::endl;
        }
    } catch (const Error& e) {
        std::cerr << "cookctl kb: " << e.what() << "\n";
        return kUsage;
    }
    return kOk;
}

int kb_range(const std::string& kb_path, const std::string& category, const std::string& name) {
    try {
        auto table = kb::load_table_file(kb_path);
        auto [lower, upper] = table.target_range(kb::category_from_string(category), name);
        std::cout << "[" << bound_text(lower) << ", " << bound_text(upper) << ") F" << std::endl;
    } catch (const Error& e) {
        std::cerr << "cookctl kb: " << e.what() << "\n";
        return kUsage;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart cooking control plane, probe simulator and voice gateway"};
    app.require_subcommand(1);

    std::string config_path;
    auto* serve_cmd = app.add_subcommand("serve", "Run the control plane");
    serve_cmd->add_option("--config", config_path, "Config file")->required();

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulated probe against a server");
    sim_cmd->add_option("--device", sim_args.device, "Device id")->required();
    sim_cmd->add_option("--t0", sim_args.params.t0_f, "Initial food temperature, F")->required();
    sim_cmd->add_option("--env", sim_args.params.env_f, "Heat source temperature, F")->required();
    sim_cmd->add_option("--k", sim_args.params.k_per_s, "Heating coefficient, 1/s")->required();
    sim_cmd->add_option("--cadence", sim_args.cadence_s, "Seconds between samples")->required();
    sim_cmd->add_option("--duration", sim_args.duration_s, "Simulated seconds")->required();
    sim_cmd->add_option("--server", sim_args.server, "Telemetry address host:port")->required();
    sim_cmd->add_option("--seed", sim_args.params.seed, "Noise seed");
    sim_cmd->add_option("--noise", sim_args.params.noise_sigma_f, "Reading noise std-dev, F");
    sim_cmd->add_option("--target", sim_args.target_f, "Initial target, F");
    sim_cmd->add_flag("--realtime", sim_args.realtime, "Sleep one cadence between samples");

    std::string say_text, say_token, say_server = "127.0.0.1:8080";
    auto* say_cmd = app.add_subcommand("say", "Send a typed utterance to the assistant");
    say_cmd->add_option("--token", say_token, "Access token")->required();
    say_cmd->add_option("--server", say_server, "HTTP address host:port")->required();
    say_cmd->add_option("text", say_text, "Utterance")->required();

    std::string scenario_path;
    auto* scenario_cmd = app.add_subcommand("scenario", "Run a scripted scenario on a simulated clock");
    scenario_cmd->add_option("path", scenario_path, "Scenario file")->required();

    std::string kb_path = data_file("doneness.kb"), kb_category, kb_name;
    double kb_temp = 0;
    auto* kb_cmd = app.add_subcommand("kb", "Query the doneness knowledge base");
    kb_cmd->require_subcommand(1);
    kb_cmd->add_option("--kb", kb_path, "Knowledge file");
    auto* classify_cmd = kb_cmd->add_subcommand("classify", "Doneness at a temperature");
    classify_cmd->add_option("--category", kb_category, "Food category")->required();
    classify_cmd->add_option("--temp", kb_temp, "Temperature, F")->required();
    auto* range_cmd = kb_cmd->add_subcommand("range", "Temperature range of a doneness");
    range_cmd->add_option("--category", kb_category, "Food category")->required();
    range_cmd->add_option("--name", kb_name, "Doneness name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kOk : kUsage;
    }

    if (*serve_cmd) return serve(config_path);
    if (*sim_cmd) return simulate(sim_args);
    if (*say_cmd) return say(say_text, say_token, say_server);
    if (*scenario_cmd) return run_scenario(scenario_path);
    if (*classify_cmd) return kb_classify(kb_path, kb_category, kb_temp);
    if (*range_cmd) return kb_range(kb_path, kb_category, kb_name);
    return kUsage;
}
