#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "cfready/api_server.hpp"
#include "cfready/cf_client.hpp"
#include "cfready/dataset_io.hpp"
#include "cfready/error.hpp"
#include "cfready/service.hpp"
#include "mock_upstream.hpp"
#include "test_support.hpp"

using namespace cfready;
using cftest::code_of;
namespace fs = std::filesystem;

namespace {

ClientOptions quick_options() {
    ClientOptions o;
    o.rate_limit_seconds = 0.0;
    o.backoff_seconds = {0.01, 0.01};
    return o;
}

std::shared_ptr<CodeforcesClient> fixture_client(std::shared_ptr<FixtureTransport> t,
                                                 std::shared_ptr<Clock> clock = nullptr) {
    return std::make_shared<CodeforcesClient>(std::move(t), quick_options(), nullptr, std::move(clock));
}

#ifdef CFREADY_CLI_PATH
struct CliResult {
    int status = -1;
    std::string output;
};

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

CliResult run_cli(const std::string& args) {
    // the CLI caches into ./data by default, so keep its working directory out of the tree
    static const cftest::TempDir cwd;
    const std::string cmd = "cd " + quote(cwd.path().string()) + " && CF_RATE_LIMIT_MS=0 " +
                            quote(CFREADY_CLI_PATH) + " " + args + " 2>&1";
    CliResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

#endif

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Registry seeded with the default synthetic forest (seed 7), active as v1.
void seed_registry(const fs::path& root) {
    ModelRegistry reg(root);
    reg.save_version(cftest::synthetic_forest().bundle);
    reg.set_active("v1");
}

} // namespace

TEST_SUITE("app") {

TEST_CASE("fetch_dataset keeps good handles and reports the rest") {
    auto transport = std::make_shared<FixtureTransport>(cftest::fixtures_dir());
    CodeforcesClient client(transport, quick_options());
    const std::vector<LabelEntry> labels{{"EXAMPLE_USER_1", 0}, {"no_such_user", 1}, {"two_contests", 1}, {"banned_user", 2}};
    std::vector<std::string> log;
    const auto result = fetch_dataset(client, labels, [&](const std::string& line) { log.push_back(line); });
    REQUIRE(result.records.size() == 2);
    CHECK(result.records[0].handle == "EXAMPLE_USER_1");
    CHECK(result.records[0].label == 0);
    CHECK(result.records[0].features.best_rating == 1082.0);
    CHECK(result.records[1].handle == "two_contests");
    REQUIRE(result.failures.size() == 2);
    CHECK(result.failures[0].handle == "no_such_user");
    CHECK(result.failures[1].handle == "banned_user");
    CHECK(log.size() >= 2);

    const std::vector<LabelEntry> hopeless{{"no_such_user", 0}};
    CHECK(code_of([&] { fetch_dataset(client, hopeless); }) == Errc::empty_output);
}

TEST_CASE("activity filter drops idle accounts") {
    auto records = synthetic_records(SyntheticSpec{{3, 3, 3, 3}, 1.0, 1});
    records.push_back(DatasetRecord{"idle", 0, FeatureVector{}});
    const auto kept = filter_active(records);
    CHECK(kept.size() == 12);
    CHECK(std::none_of(kept.begin(), kept.end(), [](const auto& r) { return r.handle == "idle"; }));
}

TEST_CASE("prepare_data fits on the training part only") {
    const auto records = synthetic_records(SyntheticSpec{{20, 20, 20, 20}, 1.0, 5});
    const auto d = prepare_data(records, 0.25, 11);
    CHECK(d.train.labels.size() == 60);
    CHECK(d.test.labels.size() == 20);
    std::vector<FeatureVector> train_vectors;
    for (auto i : d.split.train) train_vectors.push_back(records[i].features);
    CHECK(fit(train_vectors) == d.preprocessor);

    const std::vector<DatasetRecord> one_class{records[0], records[1], records[2]};
    CHECK(code_of([&] { prepare_data(one_class, 0.25, 1); }) == Errc::degenerate_class);
}

TEST_CASE("training the default synthetic forest") {
    const auto& r = cftest::synthetic_forest(7);
    CHECK(r.report.metrics.accuracy >= 0.85);
    CHECK(r.report.test_rows == 125);
    CHECK(r.bundle.metadata.training_rows == 500);
    CHECK(r.bundle.metadata.accuracy == r.report.metrics.accuracy);
    CHECK_NOTHROW(r.bundle.validate());
}

TEST_CASE("evaluate_models ranks the forest above knn on synthetic data") {
    const auto records = synthetic_records(SyntheticSpec{});
    Hyperparams hp;
    hp.seed = 1;
    const std::vector<ModelType> types{ModelType::knn, ModelType::forest};
    const auto reports = evaluate_models(records, types, hp);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].model == "forest");
    CHECK(reports[0].metrics.accuracy >= reports[1].metrics.accuracy);
    CHECK(reports[0].test_rows == reports[1].test_rows);
}

TEST_CASE("archetype users land in classes 0, 2 and 3") {
    const auto& bundle = cftest::synthetic_forest().bundle;
    const std::array<int, 3> want{0, 2, 3};
    for (int n = 1; n <= 3; ++n) {
        const auto v = extract_feature_vector(synthesize_activity(archetype_profile(n)));
        const auto r = predict_features(bundle, v, "x");
        CHECK(r.status_code == want[static_cast<std::size_t>(n - 1)]);
    }
}

TEST_CASE("status colours and response document") {
    CHECK(status_color(0) == "red");
    CHECK(status_color(1) == "amber");
    CHECK(status_color(2) == "blue");
    CHECK(status_color(3) == "green");
    CHECK(code_of([] { status_color(4); }) == Errc::unknown_label);

    PredictionResponse r;
    r.handle = "h";
    r.status_code = 2;
    r.label = "Mid-level positions";
    r.color = "blue";
    r.best_rating = 1900;
    r.total_problems_solved = 10;
    r.total_contests = 3;
    r.model_version = "v4";
    auto j = r.to_json();
    CHECK(j["feature_summary"]["best_rating"] == 1900.0);
    CHECK_FALSE(j.contains("confidence"));
    r.confidence = 0.75;
    r.best_rating.reset();
    j = r.to_json();
    CHECK(j["confidence"] == 0.75);
    CHECK(j["feature_summary"]["best_rating"].is_null());
}

TEST_CASE("service caches upstream features per handle") {
    cftest::TempDir dir;
    seed_registry(dir.path());
    auto transport = std::make_shared<FixtureTransport>(cftest::fixtures_dir());
    auto clock = std::make_shared<SimulatedClock>();
    PredictionService service(fixture_client(transport, clock), ModelRegistry(dir.path()), clock, 600);

    const auto first = service.predict("EXAMPLE_USER_2");
    CHECK(first.status_code == 2);
    CHECK(first.color == "blue");
    CHECK(first.confidence.has_value());
    CHECK(first.model_version == "v1");
    const auto calls = transport->calls();
    service.predict("EXAMPLE_USER_2");
    CHECK(transport->calls() == calls);
    clock->advance(601);
    service.predict("EXAMPLE_USER_2");
    CHECK(transport->calls() > calls);
    CHECK(service.cache_size() == 1);

    CHECK(code_of([&] { service.predict(""); }) == Errc::invalid_argument);
    CHECK_THROWS_AS(service.predict("no_such_user"), ClientError);
}

TEST_CASE("service without an active model") {
    cftest::TempDir dir;
    auto transport = std::make_shared<FixtureTransport>(cftest::fixtures_dir());
    PredictionService service(fixture_client(transport), ModelRegistry(dir.path()));
    CHECK(service.bundle() == nullptr);
    CHECK(code_of([&] { service.predict("EXAMPLE_USER_1"); }) == Errc::no_active_model);
}

TEST_CASE("service hot-swaps bundles and survives a broken activation") {
    cftest::TempDir dir;
    seed_registry(dir.path());
    auto transport = std::make_shared<FixtureTransport>(cftest::fixtures_dir());
    PredictionService service(fixture_client(transport), ModelRegistry(dir.path()));
    const auto v1 = service.bundle();
    REQUIRE(v1 != nullptr);
    CHECK(v1->metadata.version == "v1");

    ModelRegistry reg(dir.path());
    SyntheticSpec spec;
    spec.sizes = {20, 40, 25, 15};
    TrainOptions opts;
    opts.type = ModelType::knn;
    reg.save_version(train_bundle(synthetic_records(spec), opts).bundle);
    reg.set_active("v2");
    const auto r = service.predict("EXAMPLE_USER_1");
    CHECK(r.model_version == "v2");
    CHECK_FALSE(r.confidence.has_value());
    // the old snapshot stays valid for whoever still holds it
    CHECK(v1->metadata.version == "v1");

    reg.save_version(cftest::synthetic_forest().bundle);
    reg.set_active("v3");
    std::ofstream(dir.path() / "v3" / "model.json", std::ios::trunc) << "{}";
    CHECK(service.bundle()->metadata.version == "v2");
    CHECK(service.predict("EXAMPLE_USER_1").model_version == "v2");

    reg.rollback();
    CHECK(service.bundle()->metadata.version == "v2");
    reg.set_active("v1");
    CHECK(service.bundle()->metadata.version == "v1");
}

TEST_CASE("HTTP API end to end against a mock upstream") {
    cftest::TempDir dir;
    seed_registry(dir.path());
    cftest::MockUpstream upstream(cftest::fixtures_dir());
    auto opts = quick_options();
    auto client = std::make_shared<CodeforcesClient>(std::make_shared<HttpTransport>(upstream.base_url(), 5.0), opts);
    auto service = std::make_shared<PredictionService>(client, ModelRegistry(dir.path()));
    ApiServer server(service);
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    httplib::Client http("127.0.0.1", port);
    http.set_read_timeout(30, 0);

    auto post = [&](const std::string& body) {
        auto res = http.Post("/api/predict", body, "application/json");
        REQUIRE(res);
        return std::make_pair(res->status, nlohmann::json::parse(res->body));
    };

    SUBCASE("archetype handles") {
        const std::array<int, 3> want{0, 2, 3};
        for (int n = 1; n <= 3; ++n) {
            const auto [status, body] = post(R"({"handle":"EXAMPLE_USER_)" + std::to_string(n) + R"("})");
            CHECK(status == 200);
            CHECK(body["status_code"] == want[static_cast<std::size_t>(n - 1)]);
            CHECK(body["label"] == std::string(label_name(want[static_cast<std::size_t>(n - 1)])));
            CHECK(body["model_version"] == "v1");
            CHECK(body.contains("confidence"));
        }
    }
    SUBCASE("unknown handle") {
        const auto [status, body] = post(R"({"handle":"no_such_user"})");
        CHECK(status == 404);
        CHECK(body["error"] == "handle_not_found");
    }
    SUBCASE("banned handle") {
        const auto [status, body] = post(R"({"handle":"banned_user"})");
        CHECK(status == 400);
        CHECK(body["error"] == "upstream_rejected");
    }
    SUBCASE("upstream outage") {
        upstream.set_outage(true);
        const auto [status, body] = post(R"({"handle":"two_contests"})");
        CHECK(status == 503);
        CHECK(body["error"] == "upstream_unavailable");
        upstream.set_outage(false);
        CHECK(post(R"({"handle":"two_contests"})").first == 200);
    }
    SUBCASE("bad bodies") {
        CHECK(post("not json").first == 400);
        CHECK(post("[]").first == 400);
        CHECK(post(R"({"handle":7})").first == 400);
        CHECK(post(R"({"handle":""})").first == 400);
    }
    SUBCASE("health and model") {
        auto health = http.Get("/api/health");
        REQUIRE(health);
        CHECK(health->status == 200);
        const auto h = nlohmann::json::parse(health->body);
        CHECK(h["status"] == "ok");
        CHECK(h["model_version"] == "v1");
        auto model = http.Get("/api/model");
        REQUIRE(model);
        CHECK(model->status == 200);
        const auto m = nlohmann::json::parse(model->body);
        CHECK(m["version"] == "v1");
        CHECK(m["model_type"] == "forest");
    }
    server.stop();
}

TEST_CASE("HTTP API without a model answers 503") {
    cftest::TempDir dir;
    auto transport = std::make_shared<FixtureTransport>(cftest::fixtures_dir());
    auto service = std::make_shared<PredictionService>(fixture_client(transport), ModelRegistry(dir.path()));
    ApiServer server(service);
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    httplib::Client http("127.0.0.1", port);
    auto res = http.Post("/api/predict", R"({"handle":"EXAMPLE_USER_1"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 503);
    CHECK(nlohmann::json::parse(res->body)["error"] == "no_active_model");
    auto health = http.Get("/api/health");
    REQUIRE(health);
    CHECK(nlohmann::json::parse(health->body)["model_version"].is_null());
    CHECK(http.Get("/api/model")->status == 503);

    ApiServer clash(service);
    CHECK(code_of([&] { clash.bind("127.0.0.1", port); }) == Errc::port_in_use);
    server.stop();
}

#ifdef CFREADY_CLI_PATH
TEST_CASE("command line workflow") {
    cftest::TempDir dir;
    const auto data = (dir / "synth.csv").string();
    const auto models = "--model-root " + quote((dir / "models").string());
    const auto fixtures = "--fixtures " + quote(cftest::fixtures_dir().string());

    auto r = run_cli("--seed 3 synth -o " + quote(data) + " --sizes 20,40,25,15");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(load_dataset(data).size() == 100);

    r = run_cli(models + " --seed 3 train " + quote(data) + " --model forest --trees 20 --activate");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(r.output.find("saved v1") != std::string::npos);
    r = run_cli(models + " --seed 3 train " + quote(data) + " --model knn --k 3 --test-fraction 0.3");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(r.output.find("saved v2") != std::string::npos);

    r = run_cli(models + " versions --json");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto listed = nlohmann::json::parse(r.output);
    REQUIRE(listed.size() == 2);
    CHECK(listed[0]["version"] == "v1");
    CHECK(listed[0]["active"] == true);
    CHECK(listed[1]["active"] == false);

    r = run_cli(models + " activate v2");
    CHECK_MESSAGE(r.status == 0, r.output);
    r = run_cli(models + " rollback");
    CHECK_MESSAGE(r.status == 0, r.output);
    CHECK(r.output.find("v1") != std::string::npos);
    CHECK(run_cli(models + " activate v9").status == 1);

    r = run_cli(models + " " + fixtures + " predict EXAMPLE_USER_1");
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto prediction = nlohmann::json::parse(r.output);
    CHECK(prediction["handle"] == "EXAMPLE_USER_1");
    CHECK(prediction["model_version"] == "v1");
    CHECK(run_cli(models + " " + fixtures + " predict no_such_user").status == 3);

    r = run_cli("--seed 3 evaluate " + quote(data) + " --model forest --model knn --json " +
                quote((dir / "eval.json").string()) + " --csv " + quote((dir / "eval.csv").string()));
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(r.output.find("forest") != std::string::npos);
    CHECK(nlohmann::json::parse(slurp(dir / "eval.json")).size() == 2);
    CHECK(slurp(dir / "eval.csv").rfind("rank,model", 0) == 0);

    r = run_cli("eda " + quote(data) + " -o " + quote((dir / "eda").string()));
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(fs::exists(dir / "eda" / "eda.json"));
    CHECK(fs::exists(dir / "eda" / "rating_histogram.csv"));

    std::ofstream(dir / "labels.csv") << "handle,label\nEXAMPLE_USER_1,0\nEXAMPLE_USER_3,3\nno_such_user,1\n";
    r = run_cli(fixtures + " --data-dir " + quote((dir / "cache").string()) + " fetch " +
                quote((dir / "labels.csv").string()) + " -o " + quote((dir / "fetched.csv").string()));
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const auto fetched = load_dataset(dir / "fetched.csv");
    REQUIRE(fetched.size() == 2);
    CHECK(fetched[1].handle == "EXAMPLE_USER_3");
    CHECK(fetched[1].label == 3);

    CHECK(run_cli("no-such-command").status != 0);
    CHECK(run_cli("--model-root " + quote((dir / "empty").string()) + " rollback").status == 1);
}

#endif
}
