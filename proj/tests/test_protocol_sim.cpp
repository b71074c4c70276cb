#include <doctest.h>

#include <cmath>
#include <deque>

#include "cooking/error.hpp"
#include "cooking/protocol.hpp"
#include "cooking/thermo_sim.hpp"

using namespace cooking;
using namespace cooking::wire;
using namespace cooking::sim;

namespace {

struct RecordingLink : DeviceLink {
    std::vector<std::string> sent;
    std::deque<std::string> inbox;
    int fail_after = -1;

    void send_line(const std::string& line) override {
        if (fail_after >= 0 && static_cast<int>(sent.size()) >= fail_after) throw TransportError("sink closed");
        sent.push_back(line);
    }
    std::optional<std::string> poll_line() override {
        if (inbox.empty()) return std::nullopt;
        auto l = inbox.front();
        inbox.pop_front();
        return l;
    }
};

ThermalParams beef() { return {70, 225, 0.002, 0, 1}; }

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("sample encoding is exact") {
    CHECK(encode_sample({"probe-1", 3, 90000, 95.46}) == R"({"device_id":"probe-1","seq":3,"t_ms":90000,"temp_f":95.5})");
    CHECK(encode_sample({"p", 1, 0, -0.01}) == R"({"device_id":"p","seq":1,"t_ms":0,"temp_f":0.0})");
    CHECK(encode_sample({"a\"b", 1, 0, 70}) == R"({"device_id":"a\"b","seq":1,"t_ms":0,"temp_f":70.0})");
    CHECK(encode_hello("probe-1") == R"({"hello":"probe-1"})");
    CHECK(encode_error("unknown_cmd") == R"({"err":"unknown_cmd"})");
}

TEST_CASE("sample round trip") {
    TemperatureSample s{"probe-1", 42, 1700000000123, 135.2};
    CHECK(decode_sample(encode_sample(s)) == s);
}

TEST_CASE("decode_sample ignores extra keys and rejects malformed lines") {
    auto s = decode_sample(R"({"device_id":"p","seq":1,"t_ms":5,"temp_f":70,"battery":0.9})");
    CHECK(s.temp_f == 70);
    CHECK_THROWS_AS(decode_sample("not json"), ParseError);
    CHECK_THROWS_AS(decode_sample("[1,2]"), ParseError);
    CHECK_THROWS_AS(decode_sample(R"({"seq":1,"t_ms":5,"temp_f":70})"), ParseError);
    CHECK_THROWS_AS(decode_sample(R"({"device_id":"p","seq":1.5,"t_ms":5,"temp_f":70})"), ParseError);
    CHECK_THROWS_AS(decode_sample(R"({"device_id":"p","seq":1,"t_ms":"5","temp_f":70})"), ParseError);
    CHECK_THROWS_AS(decode_sample(R"({"device_id":"p","seq":1,"t_ms":5,"temp_f":"hot"})"), ParseError);
}

TEST_CASE("device lines") {
    CHECK(std::get<Hello>(decode_device_line(R"({"hello":"probe-1"})")).device_id == "probe-1");
    CHECK(std::get<DeviceError>(decode_device_line(R"({"err":"unknown_cmd"})")).code == "unknown_cmd");
    CHECK(std::get<TemperatureSample>(decode_device_line(encode_sample({"p", 1, 0, 70}))).seq == 1);
    CHECK_THROWS_AS(decode_device_line(R"({"hello":""})"), ParseError);
}

TEST_CASE("commands round trip") {
    for (auto kind : {DeviceCommand::Kind::TargetUp, DeviceCommand::Kind::TargetDown, DeviceCommand::Kind::StartTimer,
                      DeviceCommand::Kind::ArmAlarm, DeviceCommand::Kind::Disarm}) {
        auto cmd = DeviceCommand::of(kind);
        CHECK(std::get<DeviceCommand>(decode_command(encode_command(cmd))) == cmd);
    }
    CHECK(encode_command(DeviceCommand::set_target(135)) == R"({"cmd":"set_target","temp_f":135.0})");
    CHECK(std::get<DeviceCommand>(decode_command(R"({"cmd":"set_target","temp_f":135.0})")) == DeviceCommand::set_target(135));
    CHECK(std::get<UnknownCommand>(decode_command(R"({"cmd":"self_destruct"})")).cmd == "self_destruct");
    CHECK(std::holds_alternative<DeviceCommand>(decode_command(R"({"cmd":"arm_alarm","extra":1})")));
    CHECK_THROWS_AS(decode_command(R"({"cmd":"set_target"})"), ParseError);
    CHECK_THROWS_AS(decode_command(R"({"temp_f":1})"), ParseError);
}

}  // TEST_SUITE

TEST_SUITE("thermo-sim") {

TEST_CASE("step follows the closed form") {
    std::mt19937_64 rng(1);
    auto s = step(initial_state("p", beef()), beef(), 600, rng);
    CHECK(s.current_f == doctest::Approx(225 + (70 - 225) * std::exp(-1.2)).epsilon(1e-12));
    CHECK(s.current_f == doctest::Approx(178.31).epsilon(0.0001));
    CHECK(s.sim_clock_ms == 600000);
    CHECK(s.elapsed_s == 0);  // timer not running
}

TEST_CASE("composed steps equal the closed form") {
    std::mt19937_64 rng(1);
    auto s = initial_state("p", beef());
    for (int n = 1; n <= 200; ++n) {
        s = step(s, beef(), 7.5, rng);
        const double exact = 225 + (70 - 225) * std::exp(-0.002 * 7.5 * n);
        CHECK(std::fabs(s.current_f - exact) <= 1e-9 * exact);
        CHECK(s.current_f < 225);
    }
    CHECK(closed_form(beef(), 1500) == doctest::Approx(s.current_f));
}

TEST_CASE("fixed point and cooling") {
    std::mt19937_64 rng(1);
    ThermalParams still{200, 200, 0.01, 0, 1};
    CHECK(step(initial_state("p", still), still, 1234, rng).current_f == 200);
    ThermalParams cooling{200, 70, 0.01, 0, 1};
    auto s = step(initial_state("p", cooling), cooling, 10, rng);
    CHECK(s.current_f < 200);
    CHECK(s.current_f > 70);
}

TEST_CASE("crossing_time") {
    CHECK(*crossing_time(beef(), 135) == doctest::Approx(std::log(155.0 / 90.0) / 0.002));
    CHECK(*crossing_time(beef(), 70) == 0);
    CHECK_FALSE(crossing_time(beef(), 225));
    CHECK_FALSE(crossing_time(beef(), 300));
}

TEST_CASE("params validation") {
    CHECK_THROWS_AS((ThermalParams{70, 225, 0, 0, 1}.validate()), ValidationError);
    CHECK_THROWS_AS((ThermalParams{70, 225, 0.002, -1, 1}.validate()), ValidationError);
    CHECK_NOTHROW(beef().validate());
}

TEST_CASE("noise perturbs only the reading") {
    ThermalParams noisy = beef();
    noisy.noise_sigma_f = 2;
    std::mt19937_64 rng(9);
    auto s = initial_state("p", noisy);
    bool differed = false;
    for (int n = 1; n <= 20; ++n) {
        s = step(s, noisy, 30, rng);
        CHECK(s.core_f == doctest::Approx(closed_form(noisy, 30.0 * n)).epsilon(1e-12));
        differed = differed || s.current_f != s.core_f;
    }
    CHECK(differed);
}

TEST_CASE("alarm fires on the first crossing step") {
    std::mt19937_64 rng(1);
    auto s = initial_state("p", beef());
    s.target_f = 135;
    s = apply_command(s, DeviceCommand::of(DeviceCommand::Kind::ArmAlarm));
    int fired_at = -1;
    for (int n = 1; n <= 20 && fired_at < 0; ++n) {
        s = step(s, beef(), 30, rng);
        if (s.alarm_fired) fired_at = n;
        else CHECK(s.current_f < 135);
    }
    CHECK(fired_at == 10);  // 300 s: first sample at or above 135
    CHECK(s.current_f >= 135);
}

TEST_CASE("apply_command") {
    auto s = initial_state("p", beef());
    s.target_f = 134;
    CHECK(apply_command(s, DeviceCommand::of(DeviceCommand::Kind::TargetUp)).target_f == 135);
    CHECK(apply_command(s, DeviceCommand::of(DeviceCommand::Kind::TargetDown)).target_f == 133);
    CHECK(apply_command(s, DeviceCommand::set_target(165)).target_f == 165);
    CHECK_THROWS_AS(apply_command(s, DeviceCommand::set_target(1000)), OutOfRangeError);
    CHECK_THROWS_AS(apply_command(s, DeviceCommand::set_target(31.9)), OutOfRangeError);
    s.target_f = 572;
    CHECK(apply_command(s, DeviceCommand::of(DeviceCommand::Kind::TargetUp)).target_f == 572);
    s.target_f = 32;
    CHECK(apply_command(s, DeviceCommand::of(DeviceCommand::Kind::TargetDown)).target_f == 32);

    s.alarm_armed = s.alarm_fired = true;
    auto d = apply_command(s, DeviceCommand::of(DeviceCommand::Kind::Disarm));
    CHECK_FALSE(d.alarm_armed);
    CHECK_FALSE(d.alarm_fired);
}

TEST_CASE("timer counts simulated time since start") {
    std::mt19937_64 rng(1);
    auto s = step(initial_state("p", beef()), beef(), 50, rng);
    s = apply_command(s, DeviceCommand::of(DeviceCommand::Kind::StartTimer));
    CHECK(s.timer_running);
    CHECK(s.elapsed_s == 0);
    for (int i = 0; i < 7; ++i) s = step(s, beef(), 30, rng);
    CHECK(s.elapsed_s == 210);
    s = apply_command(s, DeviceCommand::of(DeviceCommand::Kind::StartTimer));
    CHECK(s.elapsed_s == 0);
}

TEST_CASE("run emits floor(duration / cadence) ordered samples") {
    RecordingLink link;
    RunOptions opt;
    opt.cadence_s = 30;
    opt.duration_s = 300;
    auto final_state = run("probe-1", beef(), opt, link);
    REQUIRE(link.sent.size() == 11);
    CHECK(link.sent[0] == R"({"hello":"probe-1"})");
    double previous = 70;
    for (std::size_t i = 1; i < link.sent.size(); ++i) {
        auto s = decode_sample(link.sent[i]);
        CHECK(s.seq == static_cast<std::int64_t>(i));
        CHECK(s.t_ms == static_cast<std::int64_t>(i) * 30000);
        CHECK(s.temp_f > previous);
        CHECK(s.temp_f < 225);
        previous = s.temp_f;
    }
    CHECK(final_state.sim_clock_ms == 300000);
    CHECK(decode_sample(link.sent.back()).temp_f == doctest::Approx(139.9));
}

TEST_CASE("same seed gives byte-identical telemetry") {
    ThermalParams noisy = beef();
    noisy.noise_sigma_f = 0.7;
    noisy.seed = 1234;
    RunOptions opt;
    opt.cadence_s = 5;
    opt.duration_s = 600;
    RecordingLink a, b, c;
    run("p", noisy, opt, a);
    run("p", noisy, opt, b);
    noisy.seed = 1235;
    run("p", noisy, opt, c);
    CHECK(a.sent == b.sent);
    CHECK(a.sent != c.sent);
}

TEST_CASE("inbound commands apply between steps and bad ones get replies") {
    RecordingLink link;
    RunOptions opt;
    opt.cadence_s = 1;
    Simulator sim("p", beef(), opt);
    link.inbox = {R"({"cmd":"set_target","temp_f":135.0})", R"({"cmd":"warp"})", "garbage",
                  R"({"cmd":"set_target","temp_f":900})", R"({"cmd":"arm_alarm"})"};
    auto s = sim.tick(link);
    CHECK(s.seq == 1);
    CHECK(sim.state().target_f == 135);
    CHECK(sim.state().alarm_armed);
    CHECK(link.sent == std::vector<std::string>{R"({"err":"unknown_cmd"})", R"({"err":"bad_cmd"})", R"({"err":"out_of_range"})"});
}

TEST_CASE("sink failure aborts the run") {
    RecordingLink link;
    link.fail_after = 3;
    RunOptions opt;
    opt.cadence_s = 1;
    opt.duration_s = 10;
    CHECK_THROWS_AS(run("p", beef(), opt, link), TransportError);
    CHECK(link.sent.size() == 3);
}

TEST_CASE("simulator rejects bad options") {
    RunOptions opt;
    opt.cadence_s = 0;
    CHECK_THROWS_AS(Simulator("p", beef(), opt), ValidationError);
    opt.cadence_s = 1;
    opt.initial_target_f = 600;
    CHECK_THROWS_AS(Simulator("p", beef(), opt), OutOfRangeError);
}

}  // TEST_SUITE
