#include "cooking/assistant.hpp"

#include "cooking/error.hpp"

#include <httplib.h>

namespace cooking::assistant {

// A fresh client per request keeps concurrent handle() calls independent.
struct HttpControlPlaneApi::Impl {
    Impl(std::string host_, int port_, double timeout_s) : host(std::move(host_)), port(port_) {
        sec = static_cast<time_t>(timeout_s);
        usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
    }

    httplib::Client client() const {
        httplib::Client c(host, port);
        c.set_connection_timeout(sec, usec);
        c.set_read_timeout(sec, usec);
        c.set_write_timeout(sec, usec);
        return c;
    }

    ApiReply finish(const httplib::Result& res, const std::string& path) {
        if (!res) throw TransportError("request " + path + " failed: " + httplib::to_string(res.error()));
        ApiReply reply;
        reply.status = res->status;
        if (!res->body.empty()) reply.body = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (reply.body.is_discarded()) reply.body = nullptr;
        return reply;
    }

    std::string host;
    int port;
    time_t sec = 5;
    time_t usec = 0;
};

HttpControlPlaneApi::HttpControlPlaneApi(std::string host, int port, double timeout_s)
    : impl_(std::make_unique<Impl>(std::move(host), port, timeout_s)) {}

HttpControlPlaneApi::~HttpControlPlaneApi() = default;

ApiReply HttpControlPlaneApi::get(const std::string& path) { 
    auto c = impl_->client();
    return impl_->finish(c.Get(path), path);
}

ApiReply HttpControlPlaneApi::post(const std::string& path, const nlohmann::json& body) {
    auto c = impl_->client();
    return impl_->finish(c.Post(path, body.dump(), "application/json"), path);
}

}  // namespace cooking::assistant
