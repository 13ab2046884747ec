#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfready/cf_types.hpp"
#include "cfready/clock.hpp"
#include "cfready/rate_limiter.hpp"
#include "cfready/transport.hpp"

namespace cfready {

inline constexpr const char* kDefaultApiBase = "https://codeforces.com/api";
inline constexpr int kMaxPageSize = 1000;

struct ClientOptions {
    std::string base_url = kDefaultApiBase;
    double rate_limit_seconds = 1.0;
    // Sleep before each retry of a network failure; size() is the retry count.
    std::vector<double> backoff_seconds{1.0, 2.0, 4.0};
    // Where problemset.json is cached; empty disables the disk cache.
    std::filesystem::path data_dir;
    std::int64_t problemset_max_age_seconds = 24 * 3600;

    // Reads CF_API_BASE and CF_RATE_LIMIT_MS.
    static ClientOptions from_env();
};

// Rate-limited client for the public Codeforces API. Thread-safe; every
// upstream request passes through the shared limiter.
class CodeforcesClient {
public:
    explicit CodeforcesClient(std::shared_ptr<Transport> transport, ClientOptions options = {},
                              std::shared_ptr<RateLimiter> limiter = nullptr,
                              std::shared_ptr<Clock> clock = nullptr);

    // Chronological; empty for unrated users.
    std::vector<RatingChange> fetch_rating_history(const std::string& handle);

    // Pages through user.status until a short page; deduplicated by id and
    // ordered by (submit_time, id).
    std::vector<Submission> fetch_submissions(const std::string& handle,
                                              int page_size = kMaxPageSize);

    // Served from <data_dir>/problemset.json while fresh.
    std::vector<Problem> fetch_problemset();

    std::size_t upstream_calls() const noexcept { return calls_; }
    const ClientOptions& options() const noexcept { return options_; }
    RateLimiter& limiter() noexcept { return *limiter_; }

private:
    nlohmann::json call(const std::string& method, const QueryParams& params);
    nlohmann::json call_once(const std::string& method, const QueryParams& params);
    std::optional<std::vector<Problem>> load_cached_problemset();
    void store_cached_problemset(const std::vector<Problem>& problems);

    std::shared_ptr<Transport> transport_;
    ClientOptions options_;
    std::shared_ptr<RateLimiter> limiter_;
    std::shared_ptr<Clock> clock_;
    std::atomic<std::size_t> calls_{0};

    std::mutex problemset_mutex_;
    std::optional<std::vector<Problem>> problemset_;
    std::int64_t problemset_fetched_at_ = 0;
};

std::shared_ptr<Transport> make_transport(const ClientOptions& options,
                                          const std::filesystem::path& fixtures_dir = {});

} // namespace cfready
