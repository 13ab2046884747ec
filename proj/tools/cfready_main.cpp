// cfready command line: data collection, training, evaluation, the model
// registry and the prediction server.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "cfready/api_server.hpp"
#include "cfready/cf_client.hpp"
#include "cfready/dataset_io.hpp"
#include "cfready/eda.hpp"
#include "cfready/error.hpp"
#include "cfready/pipeline.hpp"
#include "cfready/registry.hpp"
#include "cfready/service.hpp"
#include "cfready/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cfready;

namespace {

struct Common {
    std::string data_dir = "data";
    std::string model_root;
    std::string fixtures;
    std::uint64_t seed = 42;
};

struct ModelFlags {
    std::string model = "forest";
    double test_fraction = kDefaultTestFraction;
    std::size_t trees = ForestParams{}.n_trees;
    std::optional<std::size_t> max_depth;
    std::size_t k = KnnParams{}.k;
    double lambda = SvmParams{}.lambda;
    std::size_t epochs = SvmParams{}.epochs;
    std::size_t threads = 0;

    Hyperparams hyperparams(std::uint64_t seed) const {
        Hyperparams hp;
        hp.seed = seed;
        hp.forest.n_trees = trees;
        hp.forest.max_depth = max_depth;
        hp.knn.k = k;
        hp.svm.lambda = lambda;
        hp.svm.epochs = epochs;
        return hp;
    }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--test-fraction", f.test_fraction, "Held-out share of each class")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--trees", f.trees, "Forest size")->capture_default_str();
    cmd->add_option("--max-depth", f.max_depth, "Tree depth limit (unlimited by default)");
    cmd->add_option("--k", f.k, "Neighbours for knn")->capture_default_str();
    cmd->add_option("--lambda", f.lambda, "SVM regularization")->capture_default_str();
    cmd->add_option("--epochs", f.epochs, "SVM passes over the data")->capture_default_str();
    cmd->add_option("--threads", f.threads, "Training threads (0 = all cores)");
}

fs::path model_root(const Common& c) {
    return c.model_root.empty() ? ModelRegistry::root_from_env() : fs::path(c.model_root);
}

std::shared_ptr<CodeforcesClient> make_client(const Common& c) {
    ClientOptions opts = ClientOptions::from_env();
    opts.data_dir = c.data_dir;
    return std::make_shared<CodeforcesClient>(make_transport(opts, c.fixtures), opts);
}

std::string pct(double x) {
    return fmt::format("{:.3f}", x);
}

int cmd_fetch(const Common& c, const std::string& labels_path, const std::string& output) {
    const auto labels = load_label_file(labels_path);
    auto client = make_client(c);
    const auto result = fetch_dataset(*client, labels, [](const std::string& line) { std::cerr << line << '\n'; });
    save_dataset(output, result.records);
    fmt::print("wrote {} rows to {} ({} skipped)\n", result.records.size(), output, result.failures.size());
    return 0;
}

int cmd_train(const Common& c, const ModelFlags& f, const std::string& dataset, bool activate) {
    const auto records = load_dataset(dataset);
    TrainOptions opts;
    opts.type = model_type_from_string(f.model);
    opts.hp = f.hyperparams(c.seed);
    opts.test_fraction = f.test_fraction;
    opts.threads = f.threads;
    const auto result = train_bundle(records, opts);
    ModelRegistry registry(model_root(c));
    const auto version = registry.save_version(result.bundle);
    if (activate) registry.set_active(version);
    fmt::print("saved {} ({}; accuracy {}, macro F1 {}, {} training rows){}\n", version, f.model,
               pct(result.report.metrics.accuracy), pct(result.report.metrics.macro_f1),
               result.report.train_rows, activate ? " and activated" : "");
    return 0;
}

int cmd_evaluate(const Common& c, const ModelFlags& f, const std::string& dataset,
                 const std::vector<std::string>& models, const std::string& json_out, const std::string& csv_out) {
    const auto records = load_dataset(dataset);
    std::vector<ModelType> types;
    for (const auto& m : models) types.push_back(model_type_from_string(m));
    if (types.empty()) types = {ModelType::forest, ModelType::svm, ModelType::knn};
    const auto reports = evaluate_models(records, types, f.hyperparams(c.seed), f.test_fraction, f.threads);
    fmt::print("{}", comparison_table(reports));
    if (!json_out.empty()) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& r : reports) j.push_back(r.to_json());
        write_text_file(json_out, j.dump(2) + "\n");
    }
    if (!csv_out.empty()) write_text_file(csv_out, comparison_csv(reports));
    return 0;
}

int cmd_predict(const Common& c, const std::string& handle) {
    PredictionService service(make_client(c), ModelRegistry(model_root(c)));
    fmt::print("{}\n", service.predict(handle).to_json().dump(2));
    return 0;
}

int cmd_serve(const Common& c, std::optional<int> port, const std::string& static_dir, bool allow_no_model) {
    if (!port) {
        const char* env = std::getenv("PORT");
        port = env && *env ? std::stoi(env) : 8080;
    }
    ModelRegistry registry(model_root(c));
    if (!allow_no_model) registry.load_active();  // refuse to start without a servable model
    auto service = std::make_shared<PredictionService>(make_client(c), registry);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // worker threads inherit the mask

    ApiServer server(service, static_dir);
    const int bound = server.bind("0.0.0.0", *port);
    server.start();
    std::cerr << fmt::format("listening on port {}\n", bound);
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down\n";
    server.stop();
    return 0;
}

int cmd_synth(const Common& c, const std::string& output, double noise, const std::vector<std::size_t>& sizes) {
    SyntheticSpec spec;
    spec.seed = c.seed;
    spec.noise = noise;
    if (!sizes.empty()) {
        if (sizes.size() != kNumClasses) throw Error(Errc::invalid_argument, "--sizes takes four class sizes");
        for (int i = 0; i < kNumClasses; ++i) spec.sizes[i] = sizes[i];
    }
    const auto records = synthetic_records(spec);
    save_dataset(output, records);
    fmt::print("wrote {} synthetic rows to {}\n", records.size(), output);
    return 0;
}

int cmd_eda(const std::string& dataset, const std::string& out_dir, const std::vector<std::string>& scatter) {
    const auto records = load_dataset(dataset);
    const auto summary = eda_summary(feature_vectors(records), record_labels(records),
                                     scatter.empty() ? kDefaultScatterFeatures : scatter);
    write_text_file(fs::path(out_dir) / "eda.json", summary.to_json().dump(2) + "\n");
    for (const auto& [name, text] : summary.csv_tables()) write_text_file(fs::path(out_dir) / name, text);
    fmt::print("wrote EDA summary for {} rows to {}\n", records.size(), out_dir);
    return 0;
}

int cmd_versions(const Common& c, bool json) {
    ModelRegistry registry(model_root(c));
    const auto versions = registry.list_versions();
    const auto active = registry.active_version();
    if (json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& m : versions) {
            auto e = m.to_json();
            e["active"] = active && *active == m.version;
            j.push_back(std::move(e));
        }
        fmt::print("{}\n", j.dump(2));
        return 0;
    }
    for (const auto& m : versions) {
        fmt::print("{} {:<6} {:<22} {:<7} acc {} f1 {} rows {}\n", active && *active == m.version ? '*' : ' ',
                   m.version, m.created_at, to_string(m.model_type), pct(m.accuracy), pct(m.macro_f1),
                   m.training_rows);
    }
    return 0;
}

int report_client_error(const ClientError& e) {
    switch (e.kind()) {
    case ClientErrorKind::handle_not_found:
        std::cerr << "error: handle not found: " << e.detail() << '\n';
        return 3;
    case ClientErrorKind::network_failure:
        std::cerr << "error: Codeforces API unreachable: " << e.detail() << '\n';
        return 4;
    case ClientErrorKind::malformed_response:
        std::cerr << "error: unexpected Codeforces API response: " << e.detail() << '\n';
        return 4;
    case ClientErrorKind::upstream_rejected:
        std::cerr << "error: Codeforces API rejected the request: " << e.detail() << '\n';
        return 1;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Career-readiness prediction from Codeforces activity"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--data-dir", common.data_dir, "Cache directory for upstream data")->capture_default_str();
    app.add_option("--model-root", common.model_root, "Model registry root (default: MODEL_ROOT or ./models)");
    app.add_option("--fixtures", common.fixtures, "Serve upstream calls from recorded fixtures in this directory");
    app.add_option("--seed", common.seed, "Seed for splits, models and synthetic data")->capture_default_str();

    std::function<int()> run;
    ModelFlags flags;

    std::string labels_path, output, dataset;
    auto* fetch = app.add_subcommand("fetch", "Build a dataset from a label file");
    fetch->add_option("labels", labels_path, "CSV of handle,label")->required();
    fetch->add_option("-o,--output", output, "Dataset CSV to write")->required();
    fetch->callback([&] { run = [&] { return cmd_fetch(common, labels_path, output); }; });

    bool activate = false;
    auto* train = app.add_subcommand("train", "Train a model and save it as a new registry version");
    train->add_option("dataset", dataset, "Dataset CSV")->required();
    train->add_option("--model", flags.model, "forest, svm or knn")
        ->check(CLI::IsMember({"forest", "svm", "knn"}))
        ->capture_default_str();
    add_model_flags(train, flags);
    train->add_flag("--activate", activate, "Activate the new version after saving");
    train->callback([&] { run = [&] { return cmd_train(common, flags, dataset, activate); }; });

    std::vector<std::string> models;
    std::string json_out, csv_out;
    auto* evaluate = app.add_subcommand("evaluate", "Compare models on one shared stratified split");
    evaluate->add_option("dataset", dataset, "Dataset CSV")->required();
    evaluate->add_option("--model", models, "Model types to compare (default: all)")
        ->check(CLI::IsMember({"forest", "svm", "knn"}));
    add_model_flags(evaluate, flags);
    evaluate->add_option("--json", json_out, "Write the ranked reports as JSON");
    evaluate->add_option("--csv", csv_out, "Write the comparison table as CSV");
    evaluate->callback([&] { run = [&] { return cmd_evaluate(common, flags, dataset, models, json_out, csv_out); }; });

    std::string handle;
    auto* predict_cmd = app.add_subcommand("predict", "Predict the readiness class of a handle");
    predict_cmd->add_option("handle", handle, "Codeforces handle")->required();
    predict_cmd->callback([&] { run = [&] { return cmd_predict(common, handle); }; });

    std::optional<int> port;
    std::string static_dir;
    bool allow_no_model = false;
    auto* serve = app.add_subcommand("serve", "Run the HTTP prediction API");
    serve->add_option("--port", port, "Listen port (default: PORT or 8080)")->check(CLI::Range(0, 65535));
    serve->add_option("--static", static_dir, "Directory of web UI assets to serve at /");
    serve->add_flag("--allow-no-model", allow_no_model, "Start even when no model is active");
    serve->callback([&] { run = [&] { return cmd_serve(common, port, static_dir, allow_no_model); }; });

    double noise = 1.0;
    std::vector<std::size_t> sizes;
    auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
    synth->add_option("-o,--output", output, "Dataset CSV to write")->required();
    synth->add_option("--noise", noise, "Spread multiplier around class centers")->capture_default_str();
    synth->add_option("--sizes", sizes, "Four class sizes")->delimiter(',')->expected(kNumClasses);
    synth->callback([&] { run = [&] { return cmd_synth(common, output, noise, sizes); }; });

    std::vector<std::string> scatter;
    auto* eda = app.add_subcommand("eda", "Write EDA summary statistics");
    eda->add_option("dataset", dataset, "Dataset CSV")->required();
    eda->add_option("-o,--output-dir", output, "Directory for eda.json and CSV tables")->required();
    eda->add_option("--scatter", scatter, "Features for pairwise scatter data")->delimiter(',');
    eda->callback([&] { run = [&] { return cmd_eda(dataset, output, scatter); }; });

    bool json = false;
    auto* versions = app.add_subcommand("versions", "List registry versions (* marks the active one)");
    versions->add_flag("--json", json, "Print JSON");
    versions->callback([&] { run = [&] { return cmd_versions(common, json); }; });

    std::string version;
    auto* activate_cmd = app.add_subcommand("activate", "Point the registry at a version");
    activate_cmd->add_option("version", version, "Version id, e.g. v2")->required();
    activate_cmd->callback([&] {
        run = [&] {
            ModelRegistry(model_root(common)).set_active(version);
            fmt::print("active version is now {}\n", version);
            return 0;
        };
    });

    auto* rollback = app.add_subcommand("rollback", "Activate the version below the active one");
    rollback->callback([&] {
        run = [&] {
            fmt::print("active version is now {}\n", ModelRegistry(model_root(common)).rollback());
            return 0;
        };
    });

    CLI11_PARSE(app, argc, argv);
    try {
        return run();
    } catch (const ClientError& e) {
        return report_client_error(e);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
