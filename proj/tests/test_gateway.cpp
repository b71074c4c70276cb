#include <doctest.h>

#include <functional>
#include <random>

#include "cooking/assistant.hpp"
#include "cooking/error.hpp"
#include "test_helpers.hpp"

using namespace cooking;
using namespace cooking::assistant;
using nlohmann::json;

namespace {

// Scripted control plane: routes by exact path, records every call.
struct FakeApi : ControlPlaneApi {
    std::map<std::string, std::function<ApiReply(const json&)>> routes;
    std::vector<std::pair<std::string, json>> calls;
    bool down = false;

    FakeApi() {
        routes["GET /api/session?token=good"] = [](const json&) { return ApiReply{200, {{"device_id", "probe-1"}}}; };
        routes["GET /api/session?token=bad"] = [](const json&) { return ApiReply{401, {{"error", "unknown token"}}}; };
    }

    ApiReply call(const std::string& key, const json& body) {
        if (down) throw TransportError("connection refused");
        calls.emplace_back(key, body);
        auto it = routes.find(key);
        if (it == routes.end()) return {404, {{"error", "no route"}}};
        return it->second(body);
    }
    ApiReply get(const std::string& path) override { return call("GET " + path, nullptr); }
    ApiReply post(const std::string& path, const json& body) override { return call("POST " + path, body); }
};

struct Harness {
    FakeApi api;
    Gateway gateway{testing::shipped_model(), api};

    std::string say(const std::string& text, const std::string& token = "good") {
        return gateway.handle({text, token, "s-1"}).speech;
    }
};

const std::string kTemp = "GET /api/devices/probe-1/temperature";
const std::string kTarget = "POST /api/devices/probe-1/target";
const std::string kPrediction = "GET /api/devices/probe-1/prediction";
const std::string kAlarm = "POST /api/devices/probe-1/alarm";

}  // namespace

TEST_SUITE("assistant-gateway") {

TEST_CASE("render") {
    CHECK(render("Your food is currently at ** degrees Fahrenheit.", {{"**", 120}}) ==
          "Your food is currently at 120 degrees Fahrenheit.");
    CHECK(render("xxx and ** and xxx", {{"**", 1}, {"xxx", 2}}) == "2 and 1 and 2");
    CHECK(render("no placeholders", {}) == "no placeholders");
    CHECK_THROWS_AS(render("at ** degrees", {{"xxx", 1}}), Error);
    const auto t = ResponseTemplates::standard();
    CHECK(t.render_intent("CurrentTempIntent", {{"**", 120}}) == "Your food is currently at 120 degrees Fahrenheit.");
    CHECK(t.render_intent("SetTargetTempIntent", {{"**", 165}}) == "Ok, your Target Temperature has been set to 165 degrees.");
    CHECK(t.render_intent("CookTimeIntent", {{"xxx", 8}}) ==
          "Your thermometer predicts that the time-to-temperature is 8 minutes.");
    CHECK(t.render_intent("SetTargetAlarmIntent", {{"**", 150}}) == "Ok, your temperature alarm is set for 150 degrees.");
    CHECK_THROWS_AS(t.render_intent("DanceIntent", {}), NotFoundError);
}

TEST_CASE("round_half_up and url_encode") {
    CHECK(round_half_up(120.3) == 120);
    CHECK(round_half_up(120.5) == 121);
    CHECK(round_half_up(120.49) == 120);
    CHECK(round_half_up(-0.5) == 0);
    CHECK(url_encode("probe-1") == "probe-1");
    CHECK(url_encode("a b/c?&=") == "a%20b%2Fc%3F%26%3D");
}

TEST_CASE("current temperature") {
    Harness h;
    h.api.routes[kTemp] = [](const json&) { return ApiReply{200, {{"temp_f", 120.3}, {"t_ms", 5}, {"stale", false}}}; };
    CHECK(h.say("what's the current temperature of my food") == "Your food is currently at 120 degrees Fahrenheit.");
    CHECK(h.gateway.handle({"how hot is my food", "good", "s-9"}).session_id == "s-9");
    CHECK(h.gateway.handle({"how hot is my food", "good", ""}).intent_name == "CurrentTempIntent");

    h.api.routes[kTemp] = [](const json&) { return ApiReply{200, {{"temp_f", 120.5}, {"t_ms", 5}, {"stale", true}}}; };
    CHECK(h.say("how hot is my food") == "Your food is currently at 121 degrees Fahrenheit." + h.gateway.templates().stale_suffix);

    h.api.routes[kTemp] = [](const json&) { return ApiReply{204, nullptr}; };
    CHECK(h.say("how hot is my food") == h.gateway.templates().no_reading);
}

TEST_CASE("set target") {
    Harness h;
    h.api.routes[kTarget] = [](const json& body) {
        if (body.at("temp_f").get<double>() > 572) return ApiReply{422, {{"error", "range"}}};
        return ApiReply{200, {{"target_f", body.at("temp_f")}, {"pending", false}}};
    };
    CHECK(h.say("set thermometer to 165 degrees") == "Ok, your Target Temperature has been set to 165 degrees.");
    CHECK(h.api.calls.back().second == json{{"temp_f", 165}});
    CHECK(h.say("set the target temperature to one hundred thirty five degrees") ==
          "Ok, your Target Temperature has been set to 135 degrees.");
    CHECK(h.say("set thermometer to 900 degrees") ==
          "Sorry, 900 degrees is outside the thermometer's range of 32 to 572 degrees.");
}

TEST_CASE("cook time") {
    Harness h;
    h.api.routes[kPrediction] = [](const json&) { return ApiReply{200, {{"kind", "eta"}, {"seconds", 450.0}, {"minutes", 8}}}; };
    CHECK(h.say("when will my food be done") == "Your thermometer predicts that the time-to-temperature is 8 minutes.");
    h.api.routes[kPrediction] = [](const json&) { return ApiReply{200, {{"kind", "indeterminate"}}}; };
    CHECK(h.say("is my food ready") == "I don't have enough readings to predict yet.");
    h.api.routes[kPrediction] = [](const json&) { return ApiReply{200, {{"kind", "at_target"}}}; };
    CHECK(h.say("how long until my food is done") == "Your food has reached its target temperature.");
}

TEST_CASE("alarms") {
    Harness h;
    h.api.routes[kAlarm] = [](const json& body) {
        if (body.at("mode") == "at_target") return ApiReply{409, {{"error", "no target set"}}};
        return ApiReply{200, {{"armed", true}}};
    };
    CHECK(h.say("notify me when my food is done") == h.gateway.templates().no_target);
    CHECK(h.api.calls.back().second == json{{"mode", "at_target"}});
    CHECK(h.say("set an alarm for when my food is 150 degrees") == "Ok, your temperature alarm is set for 150 degrees.");
    CHECK(h.api.calls.back().second == json{{"mode", "at_temp"}, {"temp_f", 150}});

    h.api.routes[kAlarm] = [](const json&) { return ApiReply{200, {{"armed", true}}}; };
    CHECK(h.say("notify me when my steak is medium rare") == "Ok, I will notify you when your food is done.");
}

TEST_CASE("no match, bad token and failures still produce speech") {
    Harness h;
    auto r = h.gateway.handle({"play some music", "good", ""});
    CHECK(r.speech == h.gateway.templates().help);
    CHECK(r.intent_name == "none");
    CHECK(h.api.calls.empty());  // no round trip for unmatched text

    CHECK(h.gateway.handle({"", "good", ""}).speech == h.gateway.templates().help);
    CHECK(h.say("how hot is my food", "bad") == h.gateway.templates().unauthorized);

    h.api.routes[kTemp] = [](const json&) { return ApiReply{503, nullptr}; };
    CHECK(h.say("how hot is my food") == "Internet error.");

    h.api.routes[kTemp] = [](const json&) { return ApiReply{200, {{"unexpected", true}}}; };
    CHECK(h.say("how hot is my food") == "Internal error.");

    h.api.down = true;
    CHECK(h.say("how hot is my food") == "Internet error.");
}

TEST_CASE("every intent needs a template") {
    FakeApi api;
    auto t = ResponseTemplates::standard();
    t.by_intent.erase("CookTimeIntent");
    CHECK_THROWS_AS(Gateway(testing::shipped_model(), api, t), ValidationError);
}

TEST_CASE("fuzzed utterances always get speech") {
    Harness h;
    h.api.routes[kTemp] = [](const json&) { return ApiReply{200, {{"temp_f", 99.0}, {"t_ms", 1}, {"stale", false}}}; };
    h.api.routes[kTarget] = [](const json& b) { return ApiReply{200, {{"target_f", b.at("temp_f")}}}; };
    h.api.routes[kPrediction] = [](const json&) { return ApiReply{200, {{"kind", "indeterminate"}}}; };
    h.api.routes[kAlarm] = [](const json&) { return ApiReply{200, {{"armed", true}}}; };
    std::mt19937 rng(5);
    const std::vector<std::string> words = {"how", "hot", "is", "my", "food", "set", "thermometer", "to", "165",
                                            "degrees", "notify", "me", "when", "done", "\xE2\x80\x99", "?", "one",
                                            "hundred", "\x01", "\xFF", "{", "}", "what's", "the", "temperature"};
    for (int i = 0; i < 1000; ++i) {
        std::string text;
        for (int n = rng() % 9; n > 0; --n) text += words[rng() % words.size()] + (rng() % 3 ? " " : "");
        auto r = h.gateway.handle({text, rng() % 4 ? "good" : "bad", ""});
        CHECK_FALSE(r.speech.empty());
    }
}

}  // TEST_SUITE
