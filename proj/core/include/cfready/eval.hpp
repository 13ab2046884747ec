#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfready/matrix.hpp"
#include "cfready/models.hpp"

namespace cfready {

struct LabeledDataset {
    RowMatrix rows;
    std::vector<int> labels;
    std::vector<std::string> handles;  // empty or parallel to labels

    // Throws Error(length_mismatch | unknown_label).
    void validate() const;
    LabeledDataset select(std::span<const std::size_t> indices) const;
};

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

using ClassSizes = std::array<std::size_t, kNumClasses>;

ClassSizes class_sizes(std::span<const int> labels);

// Per-class test counts: floor of size * fraction for every class, then the
// remaining units of round(total * fraction) go to the largest fractional
// remainders (ties to the lower class).
ClassSizes stratified_test_counts(const ClassSizes& sizes, double test_fraction);

// Throws Error(degenerate_class) when a populated class would have no training rows.
SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

struct ConfusionMatrix {
    // counts[i][j]: true class i predicted as j
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    std::int64_t total() const noexcept;
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;  // true members in the evaluated set
};

// Macro averages cover only classes present in y_true; macro F1 is the mean
// of per-class F1 values.
struct Metrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassMetrics, kNumClasses> per_class{};
};

Metrics metrics(const ConfusionMatrix& cm);

struct EvaluationReport {
    std::string model;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    Metrics metrics;
    ConfusionMatrix confusion;

    nlohmann::ordered_json to_json() const;
};

EvaluationReport evaluate_model(const Model& model, std::string name, const LabeledDataset& test);

// Descending accuracy, then macro F1, then name.
std::vector<EvaluationReport> rank_models(std::vector<EvaluationReport> reports);

std::string comparison_table(std::span<const EvaluationReport> ranked);
std::string comparison_csv(std::span<const EvaluationReport> ranked);

} // namespace cfready
