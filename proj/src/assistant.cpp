#include "cooking/assistant.hpp"

#include "cooking/error.hpp"

#include <cmath>

namespace cooking::assistant {

namespace {

const char* const kAlarmIntent = "SetTargetAlarmIntent";

std::optional<std::int64_t> first_number(const intent::IntentMatch& match) {
    // Temp_* slots win over any other numeric slot.
    std::optional<std::int64_t> other;
    for (const auto& [name, value] : match.slots) {
        if (const auto* n = std::get_if<std::int64_t>(&value)) {
            if (name.rfind("Temp", 0) == 0) return *n;
            if (!other) other = *n;
        }
    }
    return other;
}

std::string device_path(const std::string& device_id, std::string_view leaf) {
    return "/api/devices/" + url_encode(device_id) + "/" + std::string(leaf);
}

}  // namespace

std::string url_encode(std::string_view text) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
            c == '.' || c == '~') {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

std::int64_t round_half_up(double value) { return static_cast<std::int64_t>(std::floor(value + 0.5)); }

std::string render(std::string_view tpl, const std::map<std::string, std::int64_t>& values) {
    static const std::string_view placeholders[] = {"**", "xxx"};
    std::string out;
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        std::size_t best = std::string_view::npos;
        std::string_view which;
        for (auto ph : placeholders) {
            auto at = tpl.find(ph, pos);
            if (at < best) {
                best = at;
                which = ph;
            }
        }
        if (best == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, best - pos));
        auto it = values.find(std::string(which));
        if (it == values.end()) throw Error("no value for placeholder " + std::string(which));
        out += std::to_string(it->second);
        pos = best + which.size();
    }
    return out;
}

ResponseTemplates ResponseTemplates::standard() {
    ResponseTemplates t;
    t.by_intent = {
        {"CurrentTempIntent", "Your food is currently at ** degrees Fahrenheit."},
        {"SetTargetTempIntent", "Ok, your Target Temperature has been set to ** degrees."},
        {"CookTimeIntent", "Your thermometer predicts that the time-to-temperature is xxx minutes."},
        {kAlarmIntent, "Ok, your temperature alarm is set for ** degrees."},
    };
    t.alarm_at_target = "Ok, I will notify you when your food is done.";
    t.indeterminate = "I don't have enough readings to predict yet.";
    t.at_target = "Your food has reached its target temperature.";
    t.no_reading = "I don't have a temperature reading from your thermometer yet.";
    t.stale_suffix = " Your thermometer has not reported recently, so this reading may be out of date.";
    t.help =
        "Sorry, I didn't catch that. You can ask for the temperature of your food, set a target temperature, "
        "ask when your food will be ready, or set a temperature alarm.";
    t.reprompt = "What else would you like to know about your food?";
    t.unauthorized = "I couldn't verify your thermometer account. Please link your thermometer and try again.";
    t.no_target = "Please set a target temperature first, then I can tell you when your food is done.";
    t.out_of_range = "Sorry, ** degrees is outside the thermometer's range of 32 to 572 degrees.";
    t.unknown_device = "I can't find your thermometer.";
    t.missing_temperature = "What temperature would you like?";
    t.internet_error = "Internet error.";
    t.internal_error = "Internal error.";
    return t;
}

std::string ResponseTemplates::render_intent(const std::string& intent_name,
                                             const std::map<std::string, std::int64_t>& values) const {
    auto it = by_intent.find(intent_name);
    if (it == by_intent.end()) throw NotFoundError("no response template for " + intent_name);
    return render(it->second, values);
}

Gateway::Gateway(const intent::InteractionModel& model, ControlPlaneApi& api, ResponseTemplates templates)
    : model_(model), api_(api), templates_(std::move(templates)) {
    for (const auto& intent : model_.intents()) {
        if (!templates_.by_intent.count(intent.name))
            throw ValidationError("no response template for intent " + intent.name);
    }
}

SpeechResponse Gateway::speak(std::string speech, std::string intent_name) const {
    SpeechResponse r;
    r.speech = std::move(speech);
    r.reprompt = templates_.reprompt;
    r.intent_name = std::move(intent_name);
    return r;
}

SpeechResponse Gateway::handle(const SpeechRequest& request) const {
    SpeechResponse response;
    try {
        auto match = intent::match_utterance(model_, request.text);
        if (!match) {
            response = speak(templates_.help, "none");
        } else {
            auto who = api_.get("/api/session?token=" + url_encode(request.token));
            if (who.status == 401 || who.status == 403) {
                response = speak(templates_.unauthorized, match->intent_name);
            } else if (who.status != 200 || !who.body.contains("device_id")) {
                throw TransportError("session lookup failed with status " + std::to_string(who.status));
            } else {
                response = dispatch(*match, who.body.at("device_id").get<std::string>());
            }
        }
    } catch (const TransportError&) {
        response = speak(templates_.internet_error, "none");
    } catch (const std::exception&) {
        response = speak(templates_.internal_error, "none");
        response.reprompt.clear();
    }
    response.session_id = request.session_id;
    return response;
}

SpeechResponse Gateway::dispatch(const intent::IntentMatch& match, const std::string& device_id) const {
    const auto& name = match.intent_name;
    auto transport_status = [](const ApiReply& r) {
        if (r.status >= 500 || r.status == 0) throw TransportError("control plane returned " + std::to_string(r.status));
    };

    if (name == "CurrentTempIntent") {
        auto r = api_.get(device_path(device_id, "temperature"));
        transport_status(r);
        if (r.status == 404) return speak(templates_.unknown_device, name);
        if (r.status == 204) return speak(templates_.no_reading, name);
        auto speech = templates_.render_intent(name, {{"**", round_half_up(r.body.at("temp_f").get<double>())}});
        if (r.body.value("stale", false)) speech += templates_.stale_suffix;
        return speak(std::move(speech), name);
    }

    if (name == "SetTargetTempIntent") {
        auto temp = first_number(match);
        if (!temp) return speak(templates_.missing_temperature, name);
        auto r = api_.post(device_path(device_id, "target"), {{"temp_f", *temp}});
        transport_status(r);
        if (r.status == 404) return speak(templates_.unknown_device, name);
        if (r.status == 422) return speak(render(templates_.out_of_range, {{"**", *temp}}), name);
        return speak(templates_.render_intent(name, {{"**", round_half_up(r.body.at("target_f").get<double>())}}), name);
    }

    if (name == "CookTimeIntent") {
        auto r = api_.get(device_path(device_id, "prediction"));
        transport_status(r);
        if (r.status == 404) return speak(templates_.unknown_device, name);
        const auto kind = r.body.at("kind").get<std::string>();
        if (kind == "eta") return speak(templates_.render_intent(name, {{"xxx", r.body.at("minutes").get<std::int64_t>()}}), name);
        if (kind == "at_target") return speak(templates_.at_target, name);
        return speak(templates_.indeterminate, name);
    }

    if (name == kAlarmIntent) {
        auto temp = first_number(match);
        nlohmann::json body = temp ? nlohmann::json{{"mode", "at_temp"}, {"temp_f", *temp}}
                                   : nlohmann::json{{"mode", "at_target"}};
        auto r = api_.post(device_path(device_id, "alarm"), body);
        transport_status(r);
        if (r.status == 404) return speak(templates_.unknown_device, name);
        if (r.status == 409) return speak(templates_.no_target, name);
        if (r.status == 422) return speak(render(templates_.out_of_range, {{"**", temp.value_or(0)}}), name);
        if (temp) return speak(templates_.render_intent(name, {{"**", *temp}}), name);
        return speak(templates_.alarm_at_target, name);
    }

    return speak(templates_.help, name);
}

}  // namespace cooking::assistant
