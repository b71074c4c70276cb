#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "cooking/assistant.hpp"
#include "cooking/control_plane.hpp"
#include "cooking/error.hpp"
#include "cooking/protocol.hpp"
#include "cooking/server.hpp"
#include "cooking/thermo_sim.hpp"
#include "test_helpers.hpp"

using namespace cooking;
using nlohmann::json;

namespace {

struct Stack {
    std::atomic<std::int64_t> now{0};
    control::Service service{control::ServiceConfig{}, [this] { return now.load(); }};
    server::ApiServer api{service, testing::shipped_table()};
    int port = 0;
    std::unique_ptr<assistant::HttpControlPlaneApi> client;
    std::unique_ptr<assistant::Gateway> gateway;

    Stack() {
        service.tokens().add("good", "probe-1");
        service.register_device("probe-1");
        port = api.bind("127.0.0.1", 0);
        client = std::make_unique<assistant::HttpControlPlaneApi>("127.0.0.1", port);
        gateway = std::make_unique<assistant::Gateway>(testing::shipped_model(), *client);
        api.set_gateway(gateway.get());
        api.start();
    }
    ~Stack() { api.stop(); }

    httplib::Client http() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(5, 0);
        return c;
    }
    void feed(std::int64_t seq, double temp) { service.ingest({"probe-1", seq, seq * 30000, temp}); }
    std::string say(const std::string& text, const std::string& token = "good") {
        auto r = client->post("/api/assistant/utterance", {{"text", text}, {"token", token}});
        REQUIRE(r.status == 200);
        return r.body.at("speech").get<std::string>();
    }
};

}  // namespace

TEST_SUITE("http") {

TEST_CASE("parse_address") {
    CHECK(server::parse_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
    CHECK(server::parse_address("localhost:0").second == 0);
    CHECK_THROWS_AS(server::parse_address("localhost"), ParseError);
    CHECK_THROWS_AS(server::parse_address("localhost:http"), ParseError);
    CHECK_THROWS_AS(server::parse_address("localhost:70000"), ParseError);
    CHECK(server::parse_address(":80") == std::pair<std::string, int>{"127.0.0.1", 80});
}

TEST_CASE("device endpoints") {
    Stack s;
    auto c = s.http();
    auto r = c.Get("/api/devices/probe-1/temperature");
    REQUIRE(r);
    CHECK(r->status == 204);
    CHECK(c.Get("/api/devices/ghost/temperature")->status == 404);

    s.service.connect("probe-1", [](const std::string&) { return true; });
    s.feed(1, 120.04);
    r = c.Get("/api/devices/probe-1/temperature");
    CHECK(r->status == 200);
    CHECK(json::parse(r->body) == json{{"temp_f", 120.0}, {"t_ms", 30000}, {"stale", false}});

    r = c.Get("/api/devices");
    CHECK(json::parse(r->body) == json{{"devices", {{{"device_id", "probe-1"}, {"state", "connected"}}}}});

    CHECK(json::parse(c.Get("/api/devices/probe-1/target")->body) == json{{"target_f", nullptr}, {"pending", false}});
    r = c.Post("/api/devices/probe-1/target", R"({"temp_f":135})", "application/json");
    CHECK(r->status == 200);
    CHECK(json::parse(r->body).at("target_f") == 135.0);
    CHECK(c.Post("/api/devices/probe-1/target", R"({"temp_f":1000})", "application/json")->status == 422);
    CHECK(c.Post("/api/devices/probe-1/target", R"({"temp":135})", "application/json")->status == 400);
    CHECK(c.Post("/api/devices/probe-1/target", "nope", "application/json")->status == 400);
    CHECK(c.Post("/api/devices/ghost/target", R"({"temp_f":135})", "application/json")->status == 404);
}

TEST_CASE("prediction and alarm endpoints") {
    Stack s;
    auto c = s.http();
    CHECK(json::parse(c.Get("/api/devices/probe-1/prediction")->body) == json{{"kind", "indeterminate"}});
    CHECK(c.Post("/api/devices/probe-1/alarm", R"({"mode":"at_target"})", "application/json")->status == 409);
    CHECK(c.Post("/api/devices/probe-1/alarm", R"({"mode":"at_temp","temp_f":5})", "application/json")->status == 422);
    CHECK(c.Post("/api/devices/probe-1/alarm", R"({"mode":"sometime"})", "application/json")->status == 400);
    CHECK(c.Post("/api/devices/probe-1/alarm", R"({"mode":"at_temp"})", "application/json")->status == 400);
    auto r = c.Post("/api/devices/probe-1/alarm", R"({"mode":"at_temp","temp_f":150})", "application/json");
    CHECK(r->status == 200);
    CHECK(json::parse(r->body) == json{{"mode", "at_temp"}, {"temp_f", 150.0}, {"armed", true}});

    for (int i = 1; i <= 8; ++i) s.feed(i, 113.0 + i);  // 1 F per 30 s, ends at 121
    s.service.set_target("probe-1", 135);
    auto p = json::parse(c.Get("/api/devices/probe-1/prediction")->body);
    CHECK(p.at("kind") == "eta");
    CHECK(p.at("seconds").get<double>() == doctest::Approx(420));
    CHECK(p.at("minutes") == 7);
    s.service.set_target("probe-1", 120);
    CHECK(json::parse(c.Get("/api/devices/probe-1/prediction")->body) == json{{"kind", "at_target"}});
}

TEST_CASE("history endpoint") {
    Stack s;
    auto c = s.http();
    for (int i = 1; i <= 5; ++i) s.feed(i, 100 + i);
    auto all = json::parse(c.Get("/api/devices/probe-1/history")->body).at("samples");
    CHECK(all.size() == 5);
    CHECK(all[0] == json{{"device_id", "probe-1"}, {"seq", 1}, {"t_ms", 30000}, {"temp_f", 101.0}});
    auto tail = json::parse(c.Get("/api/devices/probe-1/history?since_ms=90000")->body).at("samples");
    CHECK(tail.size() == 3);
    CHECK(tail[0].at("seq") == 3);
    CHECK(json::parse(c.Get("/api/devices/probe-1/history?since_ms=999999")->body).at("samples").empty());
    CHECK(c.Get("/api/devices/probe-1/history?since_ms=abc")->status == 400);
}

TEST_CASE("session and legacy endpoint") {
    Stack s;
    auto c = s.http();
    CHECK(json::parse(c.Get("/api/session?token=good")->body) == json{{"device_id", "probe-1"}});
    CHECK(c.Get("/api/session?token=nope")->status == 401);
    CHECK(c.Get("/api/session")->status == 401);

    s.feed(1, 120.3);
    auto r = c.Get("/NewHotStuff/Aimtemp?token=good");
    CHECK(r->status == 200);
    CHECK(r->body == R"({"message":"Your food is currently at 120 degrees Fahrenheit."})");
    CHECK(c.Get("/NewHotStuff/Aimtemp?token=bad")->status == 401);
    CHECK(c.Get("/NewHotStuff/Aimtemp")->status == 401);
}

TEST_CASE("knowledge endpoints") {
    Stack s;
    auto c = s.http();
    auto kb = json::parse(c.Get("/api/kb")->body);
    CHECK(kb.at("categories").size() == 4);
    CHECK(kb.at("entries").size() == 16);
    CHECK(json::parse(c.Get("/api/kb/range?category=pork_veal&name=medium")->body) ==
          json{{"lower_f", 135.0}, {"upper_f", 145.0}});
    CHECK(json::parse(c.Get("/api/kb/range?category=fish&name=Well%20done")->body) ==
          json{{"lower_f", 145.0}, {"upper_f", nullptr}});
    CHECK(c.Get("/api/kb/range?category=poultry&name=rare")->status == 404);
    CHECK(json::parse(c.Get("/api/kb/classify?category=beef_lamb_veal_duck&temp=132")->body).at("name") == "Medium rare");
    CHECK(json::parse(c.Get("/api/kb/classify?category=poultry&temp=150")->body) ==
          json{{"below_range", true}, {"lowest_f", 165.0}});
    CHECK(c.Get("/api/kb/classify?category=tofu&temp=150")->status == 404);
    CHECK(c.Get("/api/kb/classify?category=fish&temp=warm")->status == 400);
}

TEST_CASE("utterance endpoint end to end") {
    Stack s;
    s.service.connect("probe-1", [](const std::string&) { return true; });
    s.feed(1, 120.3);
    CHECK(s.say("What's the temperature of my food?") == "Your food is currently at 120 degrees Fahrenheit.");
    CHECK(s.say("set thermometer to 165 degrees") == "Ok, your Target Temperature has been set to 165 degrees.");
    CHECK(*s.service.target("probe-1").target_f == 165);
    CHECK(s.say("how hot is my food", "bad") == s.gateway->templates().unauthorized);
    CHECK(s.say("play some music") == s.gateway->templates().help);

    auto c = s.http();
    CHECK(c.Post("/api/assistant/utterance", R"({"token":"good"})", "application/json")->status == 400);
    auto r = json::parse(c.Post("/api/assistant/utterance", R"({"text":"how hot is my food","token":"good","session_id":"x"})",
                                "application/json")
                             ->body);
    CHECK(r.at("intent") == "CurrentTempIntent");
    CHECK(r.at("end_session") == false);
    CHECK(r.at("session_id") == "x");
}

TEST_CASE("utterance endpoint without a gateway") {
    control::Service service(control::ServiceConfig{});
    server::ApiServer api(service, testing::shipped_table());
    int port = api.bind("127.0.0.1", 0);
    api.start();
    httplib::Client c("127.0.0.1", port);
    CHECK(c.Post("/api/assistant/utterance", R"({"text":"hi"})", "application/json")->status == 503);
    api.stop();
}

TEST_CASE("gateway reports a downed control plane") {
    int port;
    {
        control::Service service(control::ServiceConfig{});
        server::ApiServer api(service, testing::shipped_table());
        port = api.bind("127.0.0.1", 0);
    }
    assistant::HttpControlPlaneApi dead("127.0.0.1", port, 1.0);
    CHECK_THROWS_AS(dead.get("/api/devices"), TransportError);
    assistant::Gateway gw(testing::shipped_model(), dead);
    CHECK(gw.handle({"how hot is my food", "good", ""}).speech == "Internet error.");
}

TEST_CASE("event stream delivers samples and alarms") {
    Stack s;
    s.service.arm_alarm("probe-1", control::Alarm::Mode::AtTemp, 130);
    std::string received;
    std::atomic<bool> got_alarm{false};
    std::thread reader([&] {
        auto c = s.http();
        c.Get("/api/devices/probe-1/stream", [&](const char* data, std::size_t n) {
            received.append(data, n);
            if (received.find("event: alarm") != std::string::npos) {
                got_alarm = true;
                return false;
            }
            return true;
        });
    });
    for (int i = 0; i < 100 && s.service.devices().empty(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    std::this_thread::sleep_for(std::chrono::milliseconds(300));  // let the subscription register
    s.service.ingest({"other", 1, 0, 200});
    s.feed(1, 125);
    s.feed(2, 131);
    reader.join();
    CHECK(got_alarm);
    CHECK(received.find(R"(event: sample)" "\n" R"(data: {"device_id":"probe-1","seq":1,"t_ms":30000,"temp_f":125.0})") !=
          std::string::npos);
    CHECK(received.find(R"("device_id":"other")") == std::string::npos);
    CHECK(received.find(R"("threshold_f":130.0)") != std::string::npos);
    CHECK(s.http().Get("/api/devices/ghost/stream")->status == 404);
}

TEST_CASE("binding an occupied port fails") {
    Stack s;
    control::Service other(control::ServiceConfig{});
    server::ApiServer api(other, testing::shipped_table());
    CHECK_THROWS_AS(api.bind("127.0.0.1", s.port), TransportError);
}

TEST_CASE("telemetry over TCP") {
    control::Service service(control::ServiceConfig{});
    server::TelemetryListener listener(service);
    int port = listener.bind("127.0.0.1", 0);
    listener.start();
    service.register_device("probe-1");
    service.set_target("probe-1", 140);  // pending until the probe connects

    sim::RunOptions opt;
    opt.cadence_s = 30;
    server::TcpDeviceLink link("127.0.0.1", port);
    sim::Simulator probe("probe-1", sim::ThermalParams{}, opt);
    link.send_line(wire::encode_hello("probe-1"));
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (probe.state().target_f != 140 && std::chrono::steady_clock::now() < deadline) {
        if (auto line = link.poll_line()) probe.handle_line(*line, link);
        else std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    CHECK(probe.state().target_f == 140);  // deferred target reached the device
    CHECK_FALSE(service.target("probe-1").pending);
    for (int i = 0; i < 10; ++i) link.send_line(wire::encode_sample(probe.tick(link)));
    link.close();

    auto history = service.history("probe-1", 0);
    REQUIRE(history.size() == 10);
    CHECK(history.back().seq == 10);
    CHECK(history.back().temp_f == doctest::Approx(139.9).epsilon(1e-9));

    server::TelemetryListener clash(service);
    CHECK_THROWS_AS(clash.bind("127.0.0.1", port), TransportError);
    listener.stop();
    CHECK_THROWS_AS(server::TcpDeviceLink("127.0.0.1", port), TransportError);
}

TEST_CASE("listener closes connections that skip hello") {
    control::Service service(control::ServiceConfig{});
    server::TelemetryListener listener(service);
    int port = listener.bind("127.0.0.1", 0);
    listener.start();
    server::TcpDeviceLink link("127.0.0.1", port);
    link.send_line(R"({"device_id":"p","seq":1,"t_ms":0,"temp_f":70.0})");
    link.close();  // returns once the server hangs up
    CHECK_FALSE(service.has_device("p"));
    listener.stop();
}

}  // TEST_SUITE
