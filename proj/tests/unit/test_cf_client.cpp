#include <doctest.h>

#include <fstream>
#include <thread>

#include "cfready/cf_client.hpp"
#include "cfready/error.hpp"
#include "cfready/rate_limiter.hpp"
#include "mock_upstream.hpp"
#include "test_support.hpp"

using namespace cfready;
using nlohmann::json;

namespace {

std::size_t paged_user_submissions() {
    std::ifstream in(cftest::fixtures_dir() / "user.status" / "paged_user.json");
    return json::parse(in).at("result").size();
}

struct Harness {
    std::shared_ptr<FixtureTransport> transport;
    std::shared_ptr<SimulatedClock> clock = std::make_shared<SimulatedClock>();
    std::unique_ptr<CodeforcesClient> client;

    explicit Harness(const std::filesystem::path& dir, ClientOptions opts = {}) {
        transport = std::make_shared<FixtureTransport>(dir);
        client = std::make_unique<CodeforcesClient>(transport, opts, nullptr, clock);
    }
};

// Transport that replays a scripted list of responses.
class ScriptedTransport : public Transport {
public:
    std::vector<HttpResponse> replies;
    std::size_t calls = 0;

    HttpResponse get(std::string_view, const QueryParams&) override {
        const auto& r = replies[std::min(calls, replies.size() - 1)];
        ++calls;
        if (r.status < 0) throw ClientError(ClientErrorKind::network_failure, "connection refused");
        return r;
    }
};

void write_file(const std::filesystem::path& p, const std::string& s) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << s;
}

json submission_json(std::int64_t id, std::int64_t t) {
    return to_wire(Submission{id, t, "1A", Verdict::accepted, 800, {"math"}});
}

} // namespace

TEST_SUITE("cf_client") {

TEST_CASE("rate limiter grants the first slot immediately") {
    RateLimiter rl(1.0);
    CHECK(rl.acquire_request_slot(0.0) == 0.0);
}

TEST_CASE("rate limiter pushes a close second request to one second later") {
    RateLimiter rl(1.0);
    rl.acquire_request_slot(0.0);
    CHECK(rl.acquire_request_slot(0.2) == doctest::Approx(1.0));
}

TEST_CASE("rate limiter leaves a late request alone") {
    RateLimiter rl(1.0);
    rl.acquire_request_slot(0.0);
    CHECK(rl.acquire_request_slot(2.5) == 2.5);
}

TEST_CASE("rate limiter rejects a negative interval") {
    CHECK_THROWS_AS(RateLimiter(-1.0), Error);
}

TEST_CASE("rate limiter property: random concurrent callers stay one second apart") {
    cftest::Gen g(11);
    for (int round = 0; round < 20; ++round) {
        RateLimiter rl(1.0);
        std::vector<double> permits;
        std::mutex m;
        std::vector<std::thread> threads;
        for (int t = 0; t < 4; ++t) {
            threads.emplace_back([&, seed = g.next()] {
                cftest::Gen local(seed);
                double now = 0.0;
                for (int i = 0; i < 100; ++i) {
                    now += local.real_in(0.0, 1.5);
                    const double p = rl.acquire_request_slot(now);
                    std::lock_guard lock(m);
                    permits.push_back(p);
                    CHECK(p >= now);
                }
            });
        }
        for (auto& t : threads) t.join();
        std::sort(permits.begin(), permits.end());
        for (std::size_t i = 1; i < permits.size(); ++i) REQUIRE(permits[i] - permits[i - 1] >= 1.0);
    }
}

TEST_CASE("rate limiter property: 10000 simulated acquisitions never come closer than the interval") {
    cftest::Gen g(12);
    SimulatedClock clock(g.real_in(0, 1000));
    RateLimiter rl(1.0);
    std::optional<double> last;
    std::size_t violations = 0;
    for (int i = 0; i < 10000; ++i) {
        clock.advance(g.chance(0.5) ? g.real_in(0.0, 0.3) : g.real_in(0.0, 3.0));
        const double permit = rl.acquire_request_slot(clock.now());
        CHECK(permit >= clock.now());
        clock.sleep_until(permit);
        if (last && permit - *last < 1.0) ++violations;
        last = permit;
    }
    CHECK(violations == 0);
}

TEST_CASE("validate_envelope returns the result of an OK envelope") {
    const json r = validate_envelope(json{{"status", "OK"}, {"result", json::array({1, 2})}});
    CHECK(r == json::array({1, 2}));
}

TEST_CASE("validate_envelope maps a not-found FAILED envelope to handle_not_found") {
    try {
        validate_envelope(failed_envelope("handle: User with handle ghost not found"));
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::handle_not_found);
        CHECK_FALSE(e.retryable());
    }
}

TEST_CASE("validate_envelope rejects other FAILED envelopes as upstream_rejected") {
    try {
        validate_envelope(failed_envelope("count: Field should be no more than 10000"));
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::upstream_rejected);
    }
}

TEST_CASE("validate_envelope flags missing status or result as malformed") {
    for (const json& j : {json{{"result", json::array()}}, json{{"status", "OK"}}, json::array()}) {
        try {
            validate_envelope(j);
            FAIL("no throw");
        } catch (const ClientError& e) {
            CHECK(e.kind() == ClientErrorKind::malformed_response);
        }
    }
}

TEST_CASE("only network failures are retryable") {
    CHECK(ClientError(ClientErrorKind::network_failure, "x").retryable());
    CHECK_FALSE(ClientError(ClientErrorKind::malformed_response, "x").retryable());
    CHECK_FALSE(ClientError(ClientErrorKind::upstream_rejected, "x").retryable());
    CHECK_FALSE(ClientError(ClientErrorKind::handle_not_found, "x").retryable());
}

TEST_CASE("parse_submission collapses verdicts and normalizes tags") {
    json j = submission_json(5, 100);
    j["verdict"] = "TIME_LIMIT_EXCEEDED";
    j["problem"]["tags"] = json::array({"DP", "dp", "Greedy"});
    const Submission s = parse_submission(j);
    CHECK(s.verdict == Verdict::rejected_other);
    CHECK(s.tags == std::vector<std::string>{"dp", "greedy"});
    CHECK(s.problem_key == "1A");
}

TEST_CASE("parse_submission rejects out-of-range problem ratings") {
    json j = submission_json(5, 100);
    j["problem"]["rating"] = 5000;
    CHECK_THROWS_AS(parse_submission(j), ClientError);
}

TEST_CASE("parse_rating_change rejects a zero rank") {
    json j = to_wire(RatingChange{1, 100, 1, 0, 1500});
    j["rank"] = 0;
    CHECK_THROWS_AS(parse_rating_change(j), ClientError);
}

TEST_CASE("rating history fixture with two updates comes back in time order") {
    Harness h(cftest::fixtures_dir());
    const auto history = h.client->fetch_rating_history("two_contests");
    REQUIRE(history.size() == 2);
    CHECK(history[0].contest_time < history[1].contest_time);
    CHECK(history[0].new_rating == 1200);
    CHECK(history[1].new_rating == 1350);
}

TEST_CASE("unrated user has an empty rating history") {
    Harness h(cftest::fixtures_dir());
    CHECK(h.client->fetch_rating_history("unrated_user").empty());
}

TEST_CASE("unknown handle raises handle_not_found without retrying") {
    Harness h(cftest::fixtures_dir());
    try {
        h.client->fetch_rating_history("no_such_user_xyz");
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::handle_not_found);
    }
    CHECK(h.client->upstream_calls() == 1);
}

TEST_CASE("a recorded FAILED envelope is an upstream rejection") {
    Harness h(cftest::fixtures_dir());
    try {
        h.client->fetch_rating_history("banned_user");
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::upstream_rejected);
    }
}

TEST_CASE("a history longer than one page takes two calls") {
    const auto recorded = paged_user_submissions();
    REQUIRE(recorded > 1000);
    REQUIRE(recorded < 2000);
    Harness h(cftest::fixtures_dir());
    const auto subs = h.client->fetch_submissions("paged_user", 1000);
    CHECK(subs.size() == recorded);
    CHECK(h.client->upstream_calls() == 2);
    for (std::size_t i = 1; i < subs.size(); ++i) CHECK(subs[i - 1].submit_time <= subs[i].submit_time);
}

TEST_CASE("a user without submissions needs one call") {
    cftest::TempDir dir;
    write_file(dir / "user.status/quiet.json", ok_envelope(json::array()).dump());
    Harness h(dir.path());
    CHECK(h.client->fetch_submissions("quiet").empty());
    CHECK(h.client->upstream_calls() == 1);
}

TEST_CASE("a record repeated across the page boundary is kept once") {
    cftest::TempDir dir;
    json all = json::array();
    for (int i = 0; i < 4; ++i) all.push_back(submission_json(100 - i, 1000 - i));
    all.insert(all.begin() + 2, submission_json(99, 999));  // page 1 ends and page 2 starts with id 99
    write_file(dir / "user.status/shifty.json", ok_envelope(all).dump());
    Harness h(dir.path());
    const auto subs = h.client->fetch_submissions("shifty", 2);
    CHECK(subs.size() == 4);
    CHECK(h.client->upstream_calls() == 3);
}

TEST_CASE("page size outside 1..1000 is rejected") {
    Harness h(cftest::fixtures_dir());
    CHECK_THROWS_AS(h.client->fetch_submissions("paged_user", 0), Error);
    CHECK_THROWS_AS(h.client->fetch_submissions("paged_user", 1001), Error);
}

TEST_CASE("problemset fixture yields three problems, one unrated") {
    Harness h(cftest::fixtures_dir());
    const auto problems = h.client->fetch_problemset();
    REQUIRE(problems.size() == 3);
    CHECK(problems[0].rating == 800);
    CHECK_FALSE(problems[2].rating.has_value());
    CHECK(problems[1].tags == std::vector<std::string>{"greedy", "math"});
}

TEST_CASE("a problem without an index is malformed") {
    cftest::TempDir dir;
    write_file(dir / "problemset.problems.json",
               ok_envelope(json{{"problems", json::array({json{{"contestId", 1}, {"rating", 800}}})}}).dump());
    Harness h(dir.path());
    try {
        h.client->fetch_problemset();
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::malformed_response);
    }
}

TEST_CASE("problemset is cached on disk and reused while fresh") {
    cftest::TempDir data;
    ClientOptions opts;
    opts.data_dir = data.path();
    {
        Harness h(cftest::fixtures_dir(), opts);
        h.client->fetch_problemset();
        CHECK(h.client->upstream_calls() == 1);
    }
    CHECK(std::filesystem::exists(data / "problemset.json"));
    Harness again(cftest::fixtures_dir(), opts);
    CHECK(again.client->fetch_problemset().size() == 3);
    CHECK(again.client->upstream_calls() == 0);

    // a day later the cache is stale
    auto day_later = std::make_shared<SimulatedClock>(0.0, 1'700'000'000 + 24 * 3600);
    CodeforcesClient client(again.transport, opts, nullptr, day_later);
    client.fetch_problemset();
    CHECK(client.upstream_calls() == 1);
}

TEST_CASE("fetching the same fixture twice gives identical records") {
    Harness h(cftest::fixtures_dir());
    CHECK(h.client->fetch_submissions("EXAMPLE_USER_1") == h.client->fetch_submissions("EXAMPLE_USER_1"));
    CHECK(h.client->fetch_rating_history("EXAMPLE_USER_3") == h.client->fetch_rating_history("EXAMPLE_USER_3"));
}

TEST_CASE("network failures are retried with 1, 2, 4 second backoff then surface") {
    auto t = std::make_shared<ScriptedTransport>();
    t->replies = {{-1, ""}};
    auto clock = std::make_shared<SimulatedClock>();
    ClientOptions opts;
    opts.rate_limit_seconds = 0.0;
    CodeforcesClient client(t, opts, nullptr, clock);
    try {
        client.fetch_rating_history("x");
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::network_failure);
    }
    CHECK(t->calls == 4);
    CHECK(clock->total_slept() == doctest::Approx(7.0));
}

TEST_CASE("a server error counts as a network failure and recovers on retry") {
    auto t = std::make_shared<ScriptedTransport>();
    t->replies = {{503, "busy"}, {200, ok_envelope(json::array()).dump()}};
    auto clock = std::make_shared<SimulatedClock>();
    CodeforcesClient client(t, {}, nullptr, clock);
    CHECK(client.fetch_rating_history("x").empty());
    CHECK(t->calls == 2);
}

TEST_CASE("non-retryable failures make exactly one attempt") {
    auto t = std::make_shared<ScriptedTransport>();
    t->replies = {{200, "{not json"}};
    CodeforcesClient client(t, {}, nullptr, std::make_shared<SimulatedClock>());
    CHECK_THROWS_AS(client.fetch_rating_history("x"), ClientError);
    CHECK(t->calls == 1);
}

TEST_CASE("consecutive upstream calls respect the shared limiter") {
    auto clock = std::make_shared<SimulatedClock>();
    auto limiter = std::make_shared<RateLimiter>(1.0);
    auto transport = std::make_shared<FixtureTransport>(cftest::fixtures_dir());
    CodeforcesClient a(transport, {}, limiter, clock);
    CodeforcesClient b(transport, {}, limiter, clock);
    a.fetch_rating_history("two_contests");
    b.fetch_rating_history("two_contests");
    a.fetch_rating_history("two_contests");
    CHECK(clock->now() == doctest::Approx(2.0));
}

TEST_CASE("client options read the environment") {
    setenv("CF_API_BASE", "http://localhost:9/api", 1);
    setenv("CF_RATE_LIMIT_MS", "250", 1);
    const auto opts = ClientOptions::from_env();
    CHECK(opts.base_url == "http://localhost:9/api");
    CHECK(opts.rate_limit_seconds == doctest::Approx(0.25));
    setenv("CF_RATE_LIMIT_MS", "fast", 1);
    CHECK_THROWS_AS(ClientOptions::from_env(), Error);
    unsetenv("CF_API_BASE");
    unsetenv("CF_RATE_LIMIT_MS");
}

TEST_CASE("HTTP transport talks to an upstream server") {
    cftest::MockUpstream upstream(cftest::fixtures_dir());
    ClientOptions opts;
    opts.base_url = upstream.base_url();
    opts.rate_limit_seconds = 0.0;
    CodeforcesClient client(std::make_shared<HttpTransport>(opts.base_url, 5.0), opts);
    CHECK(client.fetch_rating_history("two_contests").size() == 2);
    CHECK(client.fetch_submissions("paged_user").size() == paged_user_submissions());

    try {
        client.fetch_rating_history("ghost");
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::handle_not_found);
    }
}

TEST_CASE("HTTP transport reports a refused connection as a network failure") {
    HttpTransport t("http://127.0.0.1:1/api", 1.0);
    try {
        t.get("user.rating", {{"handle", "x"}});
        FAIL("no throw");
    } catch (const ClientError& e) {
        CHECK(e.kind() == ClientErrorKind::network_failure);
    }
}

}
