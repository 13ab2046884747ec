#include "cfready/transport.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cfready/cf_types.hpp"

namespace cfready {

using nlohmann::json;

std::string_view find_param(const QueryParams& params, std::string_view name) {
    for (const auto& [k, v] : params)
        if (k == name) return v;
    return {};
}

HttpTransport::HttpTransport(std::string base_url, double timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
    const auto scheme_end = base_url.find("://");
    const auto path_start =
        base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
        origin_ = base_url;
    } else {
        origin_ = base_url.substr(0, path_start);
        path_prefix_ = base_url.substr(path_start);
    }
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

HttpResponse HttpTransport::get(std::string_view method, const QueryParams& params) {
    // httplib::Client is not safe for concurrent use; the limiter keeps call
    // volume low, so a client per request is fine.
    httplib::Client client(origin_);
    const auto timeout_us = static_cast<long>(timeout_seconds_ * 1e6);
    client.set_connection_timeout(0, timeout_us);
    client.set_read_timeout(0, timeout_us);
    client.set_follow_location(true);

    httplib::Params query;
    for (const auto& [k, v] : params) query.emplace(k, v);
    const std::string path =
        httplib::append_query_params(path_prefix_ + "/" + std::string(method), query);

    auto result = client.Get(path);
    if (!result) {
        throw ClientError(ClientErrorKind::network_failure,
                          fmt::format("GET {}{} failed: {}", origin_, path,
                                      httplib::to_string(result.error())));
    }
    return HttpResponse{result->status, result->body};
}

FixtureTransport::FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool valid_handle(std::string_view handle) {
    if (handle.empty() || handle.size() > 64) return false;
    return std::all_of(handle.begin(), handle.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

HttpResponse failed(int status, std::string_view comment) {
    return HttpResponse{status, failed_envelope(comment).dump()};
}

} // namespace

HttpResponse FixtureTransport::get(std::string_view method, const QueryParams& params) {
    ++calls_;
    if (outage_)
        throw ClientError(ClientErrorKind::network_failure, "simulated upstream outage");

    if (method == "problemset.problems") {
        const auto path = dir_ / "problemset.problems.json";
        if (!std::filesystem::exists(path)) return failed(400, "problemset fixture missing");
        return HttpResponse{200, read_file(path)};
    }
    if (method == "user.rating" || method == "user.status") return serve_user_file(method, params);
    return failed(400, fmt::format("Method {} is not supported", method));
}

HttpResponse FixtureTransport::serve_user_file(std::string_view method, const QueryParams& params) {
    const auto handle = find_param(params, "handle");
    if (!valid_handle(handle))
        return failed(400, "handle: Field should contain only Latin letters, digits, underscore or dash characters");

    const auto path = dir_ / std::string(method) / (std::string(handle) + ".json");
    if (!std::filesystem::exists(path))
        return failed(400, fmt::format("handle: User with handle {} not found", handle));

    std::string body = read_file(path);
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) return HttpResponse{200, std::move(body)};
    if (doc.value("status", "") == "FAILED") return HttpResponse{400, std::move(body)};

    const auto from_s = find_param(params, "from");
    const auto count_s = find_param(params, "count");
    if (method != "user.status" || count_s.empty() || !doc.contains("result") ||
        !doc["result"].is_array())
        return HttpResponse{200, std::move(body)};

    // Upstream pagination is 1-based.
    const std::size_t from = from_s.empty() ? 1 : std::stoul(std::string(from_s));
    const std::size_t count = std::stoul(std::string(count_s));
    const auto& all = doc["result"];
    json page = json::array();
    for (std::size_t i = from - 1; i < all.size() && i < from - 1 + count; ++i) page.push_back(all[i]);
    return HttpResponse{200, ok_envelope(std::move(page)).dump()};
}

} // namespace cfready
