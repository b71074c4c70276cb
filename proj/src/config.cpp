#include "cooking/config.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>

#ifndef COOKING_DATA_DIR
#define COOKING_DATA_DIR "data"
#endif

namespace cooking::config {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

int port_field(const json& section, const std::string& prefix, int fallback) {
    const json* v = find(section, "port");
    if (!v) return fallback;
    if (!v->is_number_integer() || v->get<long long>() < 0 || v->get<long long>() > 65535)
        throw ConfigError(prefix + ".port", "must be an integer in [0, 65535]");
    return v->get<int>();
}

std::string string_field(const json& obj, const char* key, const std::string& path, const std::string& fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(path, "must be a string");
    return v->get<std::string>();
}

double positive_number(const json& obj, const char* key, const std::string& path, double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number() || !(v->get<double>() > 0)) throw ConfigError(path, "must be a positive number");
    return v->get<double>();
}

std::string resolve(const std::string& base, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base) / path).lexically_normal().string();
}

}  // namespace

std::string default_data_dir() {
    if (const char* env = std::getenv("COOKING_DATA_DIR"); env && *env) return env;
    return COOKING_DATA_DIR;
}

ServerConfig parse_config(std::string_view text, const std::string& base_dir) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("<document>", "not valid JSON");
    if (!doc.is_object()) throw ConfigError("<document>", "must be a JSON object");

    ServerConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        static const char* known[] = {"http", "telemetry", "ring_capacity", "staleness_timeout_s", "log_path",
                                      "tokens", "knowledge_path", "model_path", "ui_dir", "predictor"};
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ConfigError(key, "unknown field");
    }

    if (const json* http = find(doc, "http")) {
        if (!http->is_object()) throw ConfigError("http", "must be an object");
        cfg.http_host = string_field(*http, "host", "http.host", cfg.http_host);
        cfg.http_port = port_field(*http, "http", cfg.http_port);
    }
    if (const json* tel = find(doc, "telemetry")) {
        if (!tel->is_object()) throw ConfigError("telemetry", "must be an object");
        cfg.telemetry_host = string_field(*tel, "host", "telemetry.host", cfg.telemetry_host);
        cfg.telemetry_port = port_field(*tel, "telemetry", cfg.telemetry_port);
    }
    if (const json* cap = find(doc, "ring_capacity")) {
        if (!cap->is_number_integer() || cap->get<long long>() <= 0)
            throw ConfigError("ring_capacity", "must be a positive integer");
        cfg.service.ring_capacity = cap->get<std::size_t>();
    }
    cfg.service.staleness_timeout_s =
        positive_number(doc, "staleness_timeout_s", "staleness_timeout_s", cfg.service.staleness_timeout_s);
    cfg.service.log_path = resolve(base_dir, string_field(doc, "log_path", "log_path", ""));

    if (const json* tokens = find(doc, "tokens")) {
        if (!tokens->is_object()) throw ConfigError("tokens", "must map token strings to device ids");
        for (const auto& [token, device] : tokens->items()) {
            if (token.empty()) throw ConfigError("tokens", "empty token");
            if (!device.is_string() || device.get<std::string>().empty())
                throw ConfigError("tokens." + token, "must be a non-empty device id");
            cfg.tokens[token] = device.get<std::string>();
        }
    }

    const std::string data = default_data_dir();
    cfg.knowledge_path = resolve(base_dir, string_field(doc, "knowledge_path", "knowledge_path", ""));
    if (cfg.knowledge_path.empty()) cfg.knowledge_path = (fs::path(data) / "doneness.kb").string();
    cfg.model_path = resolve(base_dir, string_field(doc, "model_path", "model_path", ""));
    if (cfg.model_path.empty()) cfg.model_path = (fs::path(data) / "interaction_model.json").string();
    cfg.ui_dir = resolve(base_dir, string_field(doc, "ui_dir", "ui_dir", ""));

    if (const json* pred = find(doc, "predictor")) {
        if (!pred->is_object()) throw ConfigError("predictor", "must be an object");
        auto& p = cfg.service.predictor;
        if (const json* cap = find(*pred, "capacity")) {
            if (!cap->is_number_integer() || cap->get<long long>() < 2)
                throw ConfigError("predictor.capacity", "must be an integer >= 2");
            p.capacity = cap->get<std::size_t>();
        }
        if (const json* min = find(*pred, "min_samples")) {
            if (!min->is_number_integer() || min->get<long long>() < 2)
                throw ConfigError("predictor.min_samples", "must be an integer >= 2");
            p.min_samples = min->get<std::size_t>();
        }
        if (const json* span = find(*pred, "min_span_s")) {
            if (!span->is_number() || span->get<double>() < 0)
                throw ConfigError("predictor.min_span_s", "must be a non-negative number");
            p.min_span_s = span->get<double>();
        }
        if (const json* floor = find(*pred, "rate_floor_f_per_s")) {
            if (!floor->is_number() || floor->get<double>() < 0)
                throw ConfigError("predictor.rate_floor_f_per_s", "must be a non-negative number");
            p.rate_floor_f_per_s = floor->get<double>();
        }
    }
    return cfg;
}

ServerConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const Error& e) {
        throw ConfigError("<file>", e.what());
    }
    auto base = fs::path(path).parent_path().string();
    return parse_config(text, base.empty() ? "." : base);
}

}  // namespace cooking::config
