#include "cooking/server.hpp"

#include "cooking/error.hpp"

#include <httplib.h>

#include <json.hpp>

namespace cooking::server {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

json sample_json(const TemperatureSample& s) {
    return json{{"device_id", s.device_id}, {"seq", s.seq}, {"t_ms", s.t_ms}, {"temp_f", wire::round_tenth(s.temp_f)}};
}

json alarm_json(const control::AlarmEvent& e) {
    return json{{"device_id", e.device_id},  {"threshold_f", e.threshold_f}, {"temp_f", e.sample.temp_f},
                {"seq", e.sample.seq},       {"t_ms", e.sample.t_ms},        {"message", "Your food has reached its target temperature."}};
}

json prediction_json(const predict::Prediction& p) {
    switch (p.kind) {
        case predict::Prediction::Kind::Eta:
            return json{{"kind", "eta"},
                        {"seconds", p.seconds_remaining},
                        {"minutes", *predict::render_minutes(p)},
                        {"rate_f_per_s", p.rate_f_per_s}};
        case predict::Prediction::Kind::AlreadyAtTarget: return json{{"kind", "at_target"}};
        case predict::Prediction::Kind::Indeterminate: break;
    }
    return json{{"kind", "indeterminate"}};
}

json target_json(const control::TargetInfo& t) {
    return json{{"target_f", t.target_f ? json(*t.target_f) : json(nullptr)}, {"pending", t.pending}};
}

json entry_json(const kb::DonenessEntry& e) {
    auto bound = [](const std::optional<double>& b) { return b ? json(*b) : json(nullptr); };
    return json{{"category", kb::to_string(e.category)},
                {"name", e.name},
                {"lower_f", bound(e.lower_f)},
                {"upper_f", bound(e.upper_f)},
                {"description", e.description}};
}

std::optional<json> parse_body(const httplib::Request& req) {
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return std::nullopt;
    return body;
}

std::optional<double> number_field(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
}

std::string sse_frame(std::string_view event, const json& data) {
    return "event: " + std::string(event) + "\ndata: " + data.dump() + "\n\n";
}

}  // namespace

struct ApiServer::Impl {
    Impl(control::Service& s, const kb::DonenessTable& t) : service(s), table(t) { routes(); }

    void routes();

    // Runs a device-scoped handler, mapping library errors to HTTP statuses.
    template <typename Fn>
    void with_device(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
        const std::string id = req.matches[1];
        try {
            if (!service.has_device(id)) return send_error(res, 404, "unknown device '" + id + "'");
            fn(id);
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const OutOfRangeError& e) {
            send_error(res, 422, e.what());
        } catch (const StateError& e) {
            send_error(res, 409, e.what());
        }
    }

    control::Service& service;
    const kb::DonenessTable& table;
    std::atomic<const assistant::Gateway*> gateway{nullptr};
    std::atomic<bool> stopping{false};
    httplib::Server http;
    std::thread thread;
};

void ApiServer::Impl::routes() {
    // The library default adds SO_REUSEPORT, which lets a second server share an occupied port.
    http.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });

    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, 500, what);
    });

    http.Get("/api/devices", [this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& d : service.devices())
            list.push_back({{"device_id", d.device_id}, {"state", control::to_string(d.state)}});
        send_json(res, 200, json{{"devices", list}});
    });

    http.Get(R"(/api/devices/([^/]+)/temperature)", [this](const httplib::Request& req, httplib::Response& res) {
        with_device(req, res, [&](const std::string& id) {
            auto reading = service.current_temperature(id);
            if (!reading) {
                res.status = 204;
                return;
            }
            send_json(res, 200,
                      json{{"temp_f", wire::round_tenth(reading->temp_f)}, {"t_ms", reading->t_ms}, {"stale", reading->stale}});
        });
    });

    http.Get(R"(/api/devices/([^/]+)/target)", [this](const httplib::Request& req, httplib::Response& res) {
        with_device(req, res, [&](const std::string& id) { send_json(res, 200, target_json(service.target(id))); });
    });

    http.Post(R"(/api/devices/([^/]+)/target)", [this](const httplib::Request& req, httplib::Response& res) {
        with_device(req, res, [&](const std::string& id) {
            auto body = parse_body(req);
            auto temp = body ? number_field(*body, "temp_f") : std::nullopt;
            if (!temp) return send_error(res, 400, "body must be {\"temp_f\": <number>}");
            send_json(res, 200, target_json(service.set_target(id, *temp)));
        });
    });

    http.Get(R"(/api/devices/([^/]+)/prediction)", [this](const httplib::Request& req, httplib::Response& res) {
        with_device(req, res, [&](const std::string& id) { send_json(res, 200, prediction_json(service.prediction(id))); });
    });

    http.Post(R"(/api/devices/([^/]+)/alarm)", [this](const httplib::Request& req, httplib::Response& res) {
        with_device(req, res, [&](const std::string& id) {
            auto body = parse_body(req);
            std::string mode = body ? body->value("mode", "") : "";
            control::Alarm alarm;
            if (mode == "at_target") {
                alarm = service.arm_alarm(id, control::Alarm::Mode::AtTarget);
            } else if (mode == "at_temp") {
                auto temp = number_field(*body, "temp_f");
                if (!temp) return send_error(res, 400, "at_temp needs numeric temp_f");
                alarm = service.arm_alarm(id, control::Alarm::Mode::AtTemp, *temp);
            } else {
                return send_error(res, 400, "mode must be at_target or at_temp");
            }
            send_json(res, 200, json{{"mode", mode}, {"temp_f", alarm.temp_f}, {"armed", alarm.armed}});
        });
    });

    http.Get(R"(/api/devices/([^/]+)/history)", [this](const httplib::Request& req, httplib::Response& res) {
        with_device(req, res, [&](const std::string& id) {
            std::int64_t since = 0;
            if (req.has_param("since_ms")) {
                try {
                    since = std::stoll(req.get_param_value("since_ms"));
                } catch (const std::exception&) {
                    return send_error(res, 400, "since_ms must be an integer");
                }
            }
            json samples = json::array();
            for (const auto& s : service.history(id, since)) samples.push_back(sample_json(s));
            send_json(res, 200, json{{"samples", samples}});
        });
    });

    http.Get(R"(/api/devices/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!service.has_device(id)) return send_error(res, 404, "unknown device '" + id + "'");
        auto queue = service.subscribe();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, id, queue](std::size_t, httplib::DataSink& sink) {
                if (stopping || queue->closed()) {
                    sink.done();
                    return true;
                }
                auto event = queue->pop(std::chrono::milliseconds(200));
                std::string frame;
                if (!event) {
                    frame = ": keepalive\n\n";
                } else if (auto* s = std::get_if<control::SampleEvent>(&*event)) {
                    if (s->sample.device_id != id) return true;
                    frame = sse_frame("sample", sample_json(s->sample));
                } else if (auto* a = std::get_if<control::AlarmEvent>(&*event)) {
                    if (a->device_id != id) return true;
                    frame = sse_frame("alarm", alarm_json(*a));
                }
                return sink.write(frame.data(), frame.size());
            },
            [this, queue](bool) { service.unsubscribe(queue); });
    });

    http.Get("/api/session", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, json{{"device_id", service.resolve_token(req.get_param_value("token"))}});
        } catch (const AuthorizationError& e) {
            send_error(res, 401, e.what());
        }
    });

    // Request path used by the original voice-skill handler.
    http.Get("/NewHotStuff/Aimtemp", [this](const httplib::Request& req, httplib::Response& res) {
        std::string device_id;
        try {
            device_id = service.resolve_token(req.get_param_value("token"));
        } catch (const AuthorizationError& e) {
            return send_error(res, 401, e.what());
        }
        const auto phrases = assistant::ResponseTemplates::standard();
        std::optional<control::Reading> reading;
        if (service.has_device(device_id)) reading = service.current_temperature(device_id);
        if (!reading) return send_json(res, 200, json{{"message", phrases.no_reading}});
        send_json(res, 200,
                  json{{"message", phrases.render_intent("CurrentTempIntent",
                                                         {{"**", assistant::round_half_up(reading->temp_f)}})}});
    });

    http.Get("/api/kb", [this](const httplib::Request&, httplib::Response& res) {
        json categories = json::array();
        for (const auto& c : table.categories())
            categories.push_back({{"id", kb::to_string(c.id)},
                                  {"display_name", c.display_name},
                                  {"usda_minimum_f", c.usda_minimum_f},
                                  {"usda_note", c.usda_note}});
        json entries = json::array();
        for (const auto& e : table.entries()) entries.push_back(entry_json(e));
        send_json(res, 200, json{{"categories", categories}, {"entries", entries}});
    });

    http.Get("/api/kb/range", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto category = kb::category_from_string(req.get_param_value("category"));
            auto [lower, upper] = table.target_range(category, req.get_param_value("name"));
            send_json(res, 200,
                      json{{"lower_f", lower ? json(*lower) : json(nullptr)}, {"upper_f", upper ? json(*upper) : json(nullptr)}});
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        }
    });

    http.Get("/api/kb/classify", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            auto category = kb::category_from_string(req.get_param_value("category"));
            double temp = std::stod(req.get_param_value("temp"));
            auto result = table.classify(category, temp);
            if (auto* below = std::get_if<kb::BelowRange>(&result))
                return send_json(res, 200, json{{"below_range", true}, {"lowest_f", below->lowest_f}});
            send_json(res, 200, entry_json(std::get<kb::DonenessEntry>(result)));
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const std::logic_error&) {
            send_error(res, 400, "temp must be a number");
        }
    });

    http.Post("/api/assistant/utterance", [this](const httplib::Request& req, httplib::Response& res) {
        const auto* gw = gateway.load();
        if (!gw) return send_error(res, 503, "assistant gateway not configured");
        auto body = parse_body(req);
        if (!body || !body->contains("text") || !(*body)["text"].is_string())
            return send_error(res, 400, "body must carry a text string");
        assistant::SpeechRequest request{(*body)["text"].get<std::string>(), body->value("token", ""),
                                         body->value("session_id", "")};
        auto reply = gw->handle(request);
        send_json(res, 200,
                  json{{"speech", reply.speech},
                       {"intent", reply.intent_name},
                       {"end_session", reply.end_session},
                       {"reprompt", reply.reprompt},
                       {"session_id", reply.session_id}});
    });
}

ApiServer::ApiServer(control::Service& service, const kb::DonenessTable& table)
    : impl_(std::make_unique<Impl>(service, table)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->http.bind_to_any_port(host);
        if (port_ <= 0) throw TransportError("cannot bind HTTP on " + host);
    } else {
        if (!impl_->http.bind_to_port(host, port))
            throw TransportError("cannot bind HTTP on " + host + ":" + std::to_string(port));
        port_ = port;
    }
    return port_;
}

void ApiServer::start() {
    impl_->stopping = false;
    impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void ApiServer::stop() {
    impl_->stopping = true;
    if (impl_->http.is_running()) impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void ApiServer::set_gateway(const assistant::Gateway* gateway) { impl_->gateway = gateway; }

bool ApiServer::mount_ui(const std::string& dir) { return impl_->http.set_mount_point("/ui", dir); }

}  // namespace cooking::server
