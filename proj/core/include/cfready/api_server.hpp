#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cfready/service.hpp"

namespace cfready {

// HTTP front end:
//   POST /api/predict  {"handle": "..."} -> PredictionResponse
//   GET  /api/health   -> {"status": "ok", "model_version": "v3" | null}
//   GET  /api/model    -> active ModelMetadata
// Errors are JSON {"error": code, "detail": text} with 400 (bad body or
// rejected handle), 404 (handle_not_found) or 503 (upstream or model unavailable).
class ApiServer {
public:
    explicit ApiServer(std::shared_ptr<PredictionService> service, std::filesystem::path static_dir = {});
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Port 0 picks a free port. Returns the bound port; throws Error(port_in_use).
    int bind(const std::string& host, int port);
    // Serves until stop(); requires bind().
    void listen();
    // bind() must have been called; serves on a background thread.
    void start();
    // Stops accepting and waits for in-flight requests.
    void stop();

    int port() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace cfready
