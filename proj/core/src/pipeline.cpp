#include "cfready/pipeline.hpp"

#include <algorithm>
#include <thread>

#include <fmt/core.h>

#include "cfready/error.hpp"

namespace cfready {

std::size_t default_threads() {
    return std::max(1u, std::thread::hardware_concurrency());
}

UserActivity fetch_activity(CodeforcesClient& client, const std::string& handle) {
    UserActivity a;
    a.handle = handle;
    a.rating_history = client.fetch_rating_history(handle);
    a.submissions = client.fetch_submissions(handle);
    for (auto& p : client.fetch_problemset()) {
        auto key = p.problem_key;
        a.problem_index.emplace(std::move(key), std::move(p));
    }
    return a;
}

FetchResult fetch_dataset(CodeforcesClient& client, std::span<const LabelEntry> labels, const LogSink& log) {
    if (labels.empty()) throw Error(Errc::empty_output, "label file lists no handles");
    FetchResult out;
    for (const auto& entry : labels) {
        std::string reason;
        try {
            const UserActivity activity = fetch_activity(client, entry.handle);
            out.records.push_back({entry.handle, entry.label, extract_feature_vector(activity)});
        } catch (const ClientError& e) {
            reason = fmt::format("{}: {}", to_string(e.kind()), e.detail());
        } catch (const Error& e) {
            reason = e.what();
        }
        if (reason.empty()) {
            if (log) log(fmt::format("fetched {}", entry.handle));
        } else {
            if (log) log(fmt::format("warning: skipped {} ({})", entry.handle, reason));
            out.failures.push_back({entry.handle, std::move(reason)});
        }
    }
    if (out.records.empty()) throw Error(Errc::empty_output, fmt::format("all {} handles failed", labels.size()));
    return out;
}

std::vector<DatasetRecord> synthetic_records(const SyntheticSpec& spec) {
    auto data = generate_synthetic(spec);
    std::vector<DatasetRecord> out;
    out.reserve(data.vectors.size());
    for (std::size_t i = 0; i < data.vectors.size(); ++i)
        out.push_back({data.profiles[i].handle, data.labels[i], std::move(data.vectors[i])});
    return out;
}

std::vector<DatasetRecord> filter_active(std::span<const DatasetRecord> records) {
    std::vector<DatasetRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [](const auto& r) { return has_meaningful_activity(r.features); });
    return out;
}

PreparedData prepare_data(std::span<const DatasetRecord> records, double test_fraction, std::uint64_t seed) {
    const auto active = filter_active(records);
    if (active.size() < 2)
        throw Error(Errc::insufficient_data, fmt::format("{} usable records after the activity filter", active.size()));
    const auto labels = record_labels(active);
    const auto sizes = class_sizes(labels);
    if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t n) { return n > 0; }) < 2)
        throw Error(Errc::degenerate_class, "training needs at least two classes");

    PreparedData out;
    out.split = stratified_split(labels, test_fraction, seed);
    std::vector<FeatureVector> train_vectors;
    for (std::size_t i : out.split.train) train_vectors.push_back(active[i].features);
    out.preprocessor = fit(train_vectors);

    auto encode = [&](const std::vector<std::size_t>& idx) {
        LabeledDataset d;
        for (std::size_t i : idx) {
            d.rows.push_back(transform(active[i].features, out.preprocessor));
            d.labels.push_back(active[i].label);
            d.handles.push_back(active[i].handle);
        }
        return d;
    };
    out.train = encode(out.split.train);
    out.test = encode(out.split.test);
    return out;
}

TrainResult train_bundle(std::span<const DatasetRecord> records, const TrainOptions& options) {
    options.hp.validate();
    auto data = prepare_data(records, options.test_fraction, options.hp.seed);
    const std::size_t threads = options.threads ? options.threads : default_threads();

    Model model = train_model(options.type, data.train.rows, data.train.labels, options.hp, threads);
    set_model_schema_hash(model, data.preprocessor.schema_hash());

    TrainResult out;
    out.report = evaluate_model(model, std::string(to_string(options.type)), data.test);
    out.report.seed = options.hp.seed;
    out.report.test_fraction = options.test_fraction;
    out.report.train_rows = data.train.labels.size();

    ModelMetadata& meta = out.bundle.metadata;
    meta.created_at = utc_timestamp_now();
    meta.feature_schema = data.preprocessor.schema;
    meta.schema_hash = data.preprocessor.schema_hash();
    meta.model_type = options.type;
    meta.hyperparams = hyperparams_to_json(model);
    meta.training_rows = data.train.labels.size();
    meta.accuracy = out.report.metrics.accuracy;
    meta.macro_f1 = out.report.metrics.macro_f1;
    meta.seed = options.hp.seed;
    out.bundle.model = std::move(model);
    out.bundle.preprocessor = std::move(data.preprocessor);
    out.bundle.validate();
    return out;
}

std::vector<EvaluationReport> evaluate_models(std::span<const DatasetRecord> records,
                                              std::span<const ModelType> types, const Hyperparams& hp,
                                              double test_fraction, std::size_t threads) {
    hp.validate();
    if (types.empty()) throw Error(Errc::invalid_argument, "no model types to evaluate");
    const auto data = prepare_data(records, test_fraction, hp.seed);
    const std::size_t workers = threads ? threads : default_threads();
    std::vector<EvaluationReport> reports;
    for (ModelType t : types) {
        const Model model = train_model(t, data.train.rows, data.train.labels, hp, workers);
        auto report = evaluate_model(model, std::string(to_string(t)), data.test);
        report.seed = hp.seed;
        report.test_fraction = test_fraction;
        report.train_rows = data.train.labels.size();
        reports.push_back(std::move(report));
    }
    return rank_models(std::move(reports));
}

} // namespace cfready
