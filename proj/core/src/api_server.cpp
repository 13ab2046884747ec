#include "cfready/api_server.hpp"

#include <thread>

#include <fmt/core.h>
#include <httplib.h>

#include "cfready/error.hpp"

namespace cfready {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void send(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view detail) {
    send(res, status, ordered_json{{"error", code}, {"detail", detail}});
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

} // namespace

struct ApiServer::Impl {
    std::shared_ptr<PredictionService> service;
    httplib::Server server;
    int port = -1;
    std::thread thread;

    void predict(const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object())
            return send_error(res, 400, "bad_request", "body must be a JSON object");
        const auto it = body.find("handle");
        if (it == body.end() || !it->is_string())
            return send_error(res, 400, "bad_request", "field 'handle' must be a string");
        const std::string handle = trimmed(it->get<std::string>());
        if (handle.empty()) return send_error(res, 400, "bad_request", "field 'handle' is empty");

        try {
            send(res, 200, service->predict(handle).to_json());
        } catch (const ClientError& e) {
            switch (e.kind()) {
            case ClientErrorKind::handle_not_found:
                return send_error(res, 404, "handle_not_found", e.detail());
            case ClientErrorKind::upstream_rejected:
                return send_error(res, 400, "upstream_rejected", e.detail());
            case ClientErrorKind::malformed_response:
            case ClientErrorKind::network_failure:
                return send_error(res, 503, "upstream_unavailable", e.detail());
            }
        } catch (const Error& e) {
            if (e.code() == Errc::no_active_model || e.code() == Errc::corrupt_bundle)
                return send_error(res, 503, "no_active_model", e.what());
            return send_error(res, 500, "internal_error", e.what());
        }
    }

    void health(httplib::Response& res) {
        const auto b = service->bundle();
        send(res, 200, ordered_json{{"status", "ok"}, {"model_version", b ? ordered_json(b->metadata.version) : ordered_json(nullptr)}});
    }

    void model(httplib::Response& res) {
        const auto b = service->bundle();
        if (!b) return send_error(res, 503, "no_active_model", "no active model version");
        send(res, 200, b->metadata.to_json());
    }
};

ApiServer::ApiServer(std::shared_ptr<PredictionService> service, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>()) {
    if (!service) throw Error(Errc::invalid_argument, "server needs a prediction service");
    impl_->service = std::move(service);
    auto* impl = impl_.get();
    // httplib also sets SO_REUSEPORT, which would let a second server share the port
    impl->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    impl->server.Post("/api/predict", [impl](const httplib::Request& req, httplib::Response& res) { impl->predict(req, res); });
    impl->server.Get("/api/health", [impl](const httplib::Request&, httplib::Response& res) { impl->health(res); });
    impl->server.Get("/api/model", [impl](const httplib::Request&, httplib::Response& res) { impl->model(res); });
    impl->server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, "internal_error", e.what());
        }
    });
    if (!static_dir.empty() && !impl->server.set_mount_point("/", static_dir.string()))
        throw Error(Errc::io_failure, fmt::format("static directory '{}' does not exist", static_dir.string()));
}

ApiServer::~ApiServer() {
    stop();
}

int ApiServer::bind(const std::string& host, int port) {
    if (port < 0 || port > 65535) throw Error(Errc::invalid_argument, fmt::format("port {} out of range", port));
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port(host);
    } else {
        impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
    }
    if (impl_->port < 0) throw Error(Errc::port_in_use, fmt::format("cannot bind {}:{}", host, port));
    return impl_->port;
}

void ApiServer::listen() {
    if (impl_->port < 0) throw Error(Errc::invalid_argument, "listen() before bind()");
    impl_->server.listen_after_bind();
}

void ApiServer::start() {
    if (impl_->port < 0) throw Error(Errc::invalid_argument, "start() before bind()");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiServer::port() const noexcept {
    return impl_->port;
}

} // namespace cfready
