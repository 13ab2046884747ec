#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cfready {

using QueryParams = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    std::string body;
};

// One GET against the upstream API, e.g. method "user.rating" with {handle}.
// Connection-level failures throw ClientError(network_failure).
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(std::string_view method, const QueryParams& params) = 0;
};

class HttpTransport final : public Transport {
public:
    // base_url like "https://codeforces.com/api"
    explicit HttpTransport(std::string base_url, double timeout_seconds = 30.0);

    HttpResponse get(std::string_view method, const QueryParams& params) override;

private:
    std::string origin_;
    std::string path_prefix_;
    double timeout_seconds_;
};

// Serves recorded envelopes from a directory so the client runs offline:
//   <dir>/user.rating/<handle>.json
//   <dir>/user.status/<handle>.json      (full list; from/count are sliced here)
//   <dir>/problemset.problems.json
// Missing handles answer like upstream does: HTTP 400 with a FAILED envelope.
class FixtureTransport final : public Transport {
public:
    explicit FixtureTransport(std::filesystem::path dir);

    HttpResponse get(std::string_view method, const QueryParams& params) override;

    // While set, every call fails as a network outage.
    void set_outage(bool down) noexcept { outage_ = down; }
    std::size_t calls() const noexcept { return calls_; }

private:
    HttpResponse serve_user_file(std::string_view method, const QueryParams& params);

    std::filesystem::path dir_;
    std::atomic<bool> outage_{false};
    std::atomic<std::size_t> calls_{0};
};

// Returns the value of `name` in `params`, or empty.
std::string_view find_param(const QueryParams& params, std::string_view name);

} // namespace cfready
