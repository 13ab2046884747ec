#include "cfready/cf_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <unordered_set>

#include <fmt/core.h>

#include "cfready/error.hpp"

namespace cfready {

using nlohmann::json;

ClientOptions ClientOptions::from_env() {
    ClientOptions opts;
    if (const char* base = std::getenv("CF_API_BASE"); base && *base) opts.base_url = base;
    if (const char* ms = std::getenv("CF_RATE_LIMIT_MS"); ms && *ms) {
        char* end = nullptr;
        const double v = std::strtod(ms, &end);
        if (end == ms || v < 0)
            throw Error(Errc::invalid_argument, fmt::format("bad CF_RATE_LIMIT_MS '{}'", ms));
        opts.rate_limit_seconds = v / 1000.0;
    }
    return opts;
}

CodeforcesClient::CodeforcesClient(std::shared_ptr<Transport> transport, ClientOptions options,
                                   std::shared_ptr<RateLimiter> limiter,
                                   std::shared_ptr<Clock> clock)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      limiter_(limiter ? std::move(limiter)
                       : std::make_shared<RateLimiter>(options_.rate_limit_seconds)),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()) {
    if (!transport_) throw Error(Errc::invalid_argument, "client needs a transport");
}

json CodeforcesClient::call_once(const std::string& method, const QueryParams& params) {
    clock_->sleep_until(limiter_->acquire_request_slot(clock_->now()));
    ++calls_;
    const HttpResponse resp = transport_->get(method, params);

    if (resp.status >= 500 || resp.status == 429) {
        throw ClientError(ClientErrorKind::network_failure,
                          fmt::format("{} answered HTTP {}", method, resp.status));
    }
    json doc = json::parse(resp.body, nullptr, false);
    if (doc.is_discarded()) {
        throw ClientError(resp.status == 200 ? ClientErrorKind::malformed_response
                                             : ClientErrorKind::upstream_rejected,
                          fmt::format("{} returned a non-JSON body (HTTP {})", method, resp.status));
    }
    return validate_envelope(doc);
}

json CodeforcesClient::call(const std::string& method, const QueryParams& params) {
    const std::size_t retries = options_.backoff_seconds.size();
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return call_once(method, params);
        } catch (const ClientError& e) {
            if (!e.retryable() || attempt >= retries) throw;
            clock_->sleep_for(options_.backoff_seconds[attempt]);
        }
    }
}

std::vector<RatingChange> CodeforcesClient::fetch_rating_history(const std::string& handle) {
    if (handle.empty()) throw Error(Errc::invalid_argument, "empty handle");
    const json result = call("user.rating", {{"handle", handle}});
    if (!result.is_array()) throw ClientError(ClientErrorKind::malformed_response, "user.rating result is not a list");

    std::vector<RatingChange> history;
    history.reserve(result.size());
    for (const auto& entry : result) history.push_back(parse_rating_change(entry));
    std::stable_sort(history.begin(), history.end(),
                     [](const auto& a, const auto& b) { return a.contest_time < b.contest_time; });
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].contest_time == history[i - 1].contest_time)
            throw ClientError(ClientErrorKind::malformed_response,
                              "two rating changes share one timestamp");
    }
    return history;
}

std::vector<Submission> CodeforcesClient::fetch_submissions(const std::string& handle,
                                                            int page_size) {
    if (handle.empty()) throw Error(Errc::invalid_argument, "empty handle");
    if (page_size < 1 || page_size > kMaxPageSize)
        throw Error(Errc::invalid_argument, fmt::format("page size {} outside [1, {}]", page_size, kMaxPageSize));

    std::vector<Submission> out;
    std::unordered_set<std::int64_t> seen;
    for (std::size_t from = 1;; from += static_cast<std::size_t>(page_size)) {
        const json page = call("user.status", {{"handle", handle},
                                               {"from", std::to_string(from)},
                                               {"count", std::to_string(page_size)}});
        if (!page.is_array()) throw ClientError(ClientErrorKind::malformed_response, "user.status result is not a list");
        for (const auto& entry : page) {
            Submission s = parse_submission(entry);
            if (seen.insert(s.submission_id).second) out.push_back(std::move(s));
        }
        if (page.size() < static_cast<std::size_t>(page_size)) break;
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.submit_time, a.submission_id) < std::tie(b.submit_time, b.submission_id);
    });
    return out;
}

std::vector<Problem> CodeforcesClient::fetch_problemset() {
    std::lock_guard lock(problemset_mutex_);
    const auto now = clock_->unix_now();
    if (problemset_ && now - problemset_fetched_at_ < options_.problemset_max_age_seconds)
        return *problemset_;
    if (auto cached = load_cached_problemset()) return *cached;

    const json result = call("problemset.problems", {});
    if (!result.is_object() || !result.contains("problems") || !result["problems"].is_array())
        throw ClientError(ClientErrorKind::malformed_response, "problemset result lacks a problems list");

    std::vector<Problem> problems;
    std::set<std::string> keys;
    for (const auto& entry : result["problems"]) {
        Problem p = parse_problem(entry);
        if (keys.insert(p.problem_key).second) problems.push_back(std::move(p));
    }
    problemset_ = problems;
    problemset_fetched_at_ = now;
    store_cached_problemset(problems);
    return problems;
}

std::optional<std::vector<Problem>> CodeforcesClient::load_cached_problemset() {
    if (options_.data_dir.empty()) return std::nullopt;
    std::ifstream in(options_.data_dir / "problemset.json");
    if (!in) return std::nullopt;
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("fetched_at") || !doc.contains("problems"))
        return std::nullopt;
    const auto fetched_at = doc["fetched_at"].get<std::int64_t>();
    if (clock_->unix_now() - fetched_at >= options_.problemset_max_age_seconds) return std::nullopt;
    try {
        std::vector<Problem> problems;
        for (const auto& entry : doc["problems"]) problems.push_back(parse_problem(entry));
        problemset_ = problems;
        problemset_fetched_at_ = fetched_at;
        return problems;
    } catch (const ClientError&) {
        return std::nullopt;
    }
}

void CodeforcesClient::store_cached_problemset(const std::vector<Problem>& problems) {
    if (options_.data_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(options_.data_dir, ec);
    json doc{{"fetched_at", problemset_fetched_at_}, {"problems", json::array()}};
    for (const auto& p : problems) doc["problems"].push_back(to_wire(p));

    const auto target = options_.data_dir / "problemset.json";
    const auto tmp = options_.data_dir / "problemset.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << doc.dump();
        if (!out) return;  // the cache is an optimisation; the fetch already succeeded
    }
    std::filesystem::rename(tmp, target, ec);
}

std::shared_ptr<Transport> make_transport(const ClientOptions& options,
                                          const std::filesystem::path& fixtures_dir) {
    if (!fixtures_dir.empty()) return std::make_shared<FixtureTransport>(fixtures_dir);
    return std::make_shared<HttpTransport>(options.base_url);
}

} // namespace cfready
