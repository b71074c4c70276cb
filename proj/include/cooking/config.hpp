#pragma once

#include <map>
#include <string>
#include <string_view>

#include "cooking/control_plane.hpp"
#include "cooking/error.hpp"

namespace cooking::config {

/// Config problem tied to one field (dotted path, e.g. "http.port").
class ConfigError : public ParseError {
public:
    ConfigError(std::string field, const std::string& what)
        : ParseError("config field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ServerConfig {
    std::string http_host = "127.0.0.1";
    int http_port = 8080;
    std::string telemetry_host = "127.0.0.1";
    int telemetry_port = 9099;
    control::ServiceConfig service;
    std::map<std::string, std::string> tokens;  // token -> device id
    std::string knowledge_path;
    std::string model_path;
    std::string ui_dir;  // empty: no static UI
};

/// Directory holding the shipped knowledge file and interaction model.
std::string default_data_dir();

/// Parses a JSON config. Relative paths resolve against base_dir. Throws
/// ConfigError naming the offending field.
ServerConfig parse_config(std::string_view text, const std::string& base_dir = ".");
ServerConfig load_config(const std::string& path);

}  // namespace cooking::config
