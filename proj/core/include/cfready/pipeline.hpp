#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cfready/cf_client.hpp"
#include "cfready/dataset_io.hpp"
#include "cfready/eval.hpp"
#include "cfready/models.hpp"
#include "cfready/preprocessing.hpp"
#include "cfready/registry.hpp"
#include "cfready/synthetic.hpp"

namespace cfready {

inline constexpr double kDefaultTestFraction = 0.2;

// Rating history, all submissions and the problemset index for one handle.
UserActivity fetch_activity(CodeforcesClient& client, const std::string& handle);

struct FetchFailure {
    std::string handle;
    std::string reason;
};

struct FetchResult {
    std::vector<DatasetRecord> records;
    std::vector<FetchFailure> failures;
};

using LogSink = std::function<void(const std::string&)>;

// Fetches and extracts every labelled handle; failures are reported and skipped.
// Throws Error(empty_output) only when every handle failed.
FetchResult fetch_dataset(CodeforcesClient& client, std::span<const LabelEntry> labels,
                          const LogSink& log = {});

std::vector<DatasetRecord> synthetic_records(const SyntheticSpec& spec);

// Drops records failing has_meaningful_activity.
std::vector<DatasetRecord> filter_active(std::span<const DatasetRecord> records);

// Activity filter, stratified split, preprocessor fitted on the training part.
// Throws Error(insufficient_data | degenerate_class).
struct PreparedData {
    PreprocessorParams preprocessor;
    LabeledDataset train;
    LabeledDataset test;
    SplitIndices split;  // indices into the filtered records
};

PreparedData prepare_data(std::span<const DatasetRecord> records, double test_fraction, std::uint64_t seed);

struct TrainOptions {
    ModelType type = ModelType::forest;
    Hyperparams hp;  // hp.seed drives both the split and the model
    double test_fraction = kDefaultTestFraction;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

struct TrainResult {
    ModelBundle bundle;  // metadata.version empty until saved
    EvaluationReport report;
};

TrainResult train_bundle(std::span<const DatasetRecord> records, const TrainOptions& options);

// One split shared by every model type; reports come back ranked.
std::vector<EvaluationReport> evaluate_models(std::span<const DatasetRecord> records,
                                              std::span<const ModelType> types, const Hyperparams& hp,
                                              double test_fraction = kDefaultTestFraction,
                                              std::size_t threads = 0);

std::size_t default_threads();

} // namespace cfready
