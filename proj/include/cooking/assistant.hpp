#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cooking/intent.hpp"

namespace cooking::assistant {

struct SpeechRequest {
    std::string text;
    std::string token;
    std::string session_id;
};

struct SpeechResponse {
    std::string speech;
    std::string reprompt;
    bool end_session = false;
    std::string intent_name = "none";
    std::string session_id;
};

struct ApiReply {
    int status = 0;
    nlohmann::json body;  // null when the body is empty or not JSON
};

/// HTTP surface of the control plane as seen by the gateway. Implementations
/// throw TransportError when the service cannot be reached.
class ControlPlaneApi {
public:
    virtual ~ControlPlaneApi() = default;
    virtual ApiReply get(const std::string& path) = 0;
    virtual ApiReply post(const std::string& path, const nlohmann::json& body) = 0;
};

class HttpControlPlaneApi : public ControlPlaneApi {
public:
    HttpControlPlaneApi(std::string host, int port, double timeout_s = 5.0);
    ~HttpControlPlaneApi() override;

    ApiReply get(const std::string& path) override;
    ApiReply post(const std::string& path, const nlohmann::json& body) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Percent-encodes a path segment or query value.
std::string url_encode(std::string_view text);

/// Rounds half away from zero toward +inf for ties (120.5 -> 121).
std::int64_t round_half_up(double value);

/// Substitutes each placeholder key (e.g. "**", "xxx") in the template.
/// Throws Error when a placeholder present in the template has no value.
std::string render(std::string_view tpl, const std::map<std::string, std::int64_t>& values);

/// Reply templates keyed by intent name, plus the fixed phrases used for
/// non-happy paths.
struct ResponseTemplates {
    std::map<std::string, std::string> by_intent;
    std::string alarm_at_target;
    std::string indeterminate;
    std::string at_target;
    std::string no_reading;
    std::string stale_suffix;
    std::string help;
    std::string reprompt;
    std::string unauthorized;
    std::string no_target;
    std::string out_of_range;
    std::string unknown_device;
    std::string missing_temperature;
    std::string internet_error;
    std::string internal_error;

    static ResponseTemplates standard();

    /// Renders the template of intent_name. Throws NotFoundError for an
    /// intent without a template.
    std::string render_intent(const std::string& intent_name, const std::map<std::string, std::int64_t>& values) const;
};

/// Stateless utterance handler: match the intent, call the control plane
/// over its HTTP API, render the reply. Every request yields speech.
class Gateway {
public:
    /// Throws ValidationError when an intent of the model lacks a template.
    Gateway(const intent::InteractionModel& model, ControlPlaneApi& api,
            ResponseTemplates templates = ResponseTemplates::standard());

    SpeechResponse handle(const SpeechRequest& request) const;

    const ResponseTemplates& templates() const { return templates_; }

private:
    SpeechResponse dispatch(const intent::IntentMatch& match, const std::string& device_id) const;
    SpeechResponse speak(std::string speech, std::string intent_name) const;

    const intent::InteractionModel& model_;
    ControlPlaneApi& api_;
    ResponseTemplates templates_;
};

}  // namespace cooking::assistant
