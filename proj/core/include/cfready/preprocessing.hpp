#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfready/features.hpp"

namespace cfready {

enum class ScalePolicy { minmax, zscore, log_then_minmax, passthrough };

std::string_view to_string(ScalePolicy p) noexcept;
ScalePolicy scale_policy_from_string(std::string_view s);

// Fitted on imputed values; for log_then_minmax, min/max/mean/std describe
// log1p(value) while median stays on the raw scale (it feeds imputation).
struct ColumnStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population
    double median = 0.0;

    bool operator==(const ColumnStats&) const = default;
};

struct FeatureColumn {
    std::string name;
    ScalePolicy policy = ScalePolicy::passthrough;
    bool optional = false;
    ColumnStats stats;

    bool operator==(const FeatureColumn&) const = default;
};

inline constexpr std::size_t kTagVocabularySize = 10;
inline constexpr std::string_view kDominantTagPrefix = "dominant_tag.";

using EncodedRow = std::vector<double>;

// Immutable after fit(); defines a deterministic FeatureVector -> EncodedRow map.
struct PreprocessorParams {
    std::vector<FeatureColumn> columns;  // numeric columns, schema order
    TagVocabulary vocab;
    std::vector<std::string> schema;     // columns then one dominant_tag.* slot per vocab entry

    std::string schema_hash() const;

    nlohmann::ordered_json to_json() const;
    // Throws Error(corrupt_model) on structural problems.
    static PreprocessorParams from_json(const nlohmann::json& j);

    bool operator==(const PreprocessorParams&) const = default;
};

// Column layout (names, policies, optionality) for a given vocabulary.
std::vector<FeatureColumn> feature_layout(const TagVocabulary& vocab);

// Value of a named raw column; nullopt when an optional feature is absent.
// Tag columns fold counts for tags outside the vocabulary into "other".
std::optional<double> raw_feature(const FeatureVector& v, std::string_view column,
                                  const TagVocabulary& vocab);

// Most-solved vocabulary tag (ties to vocabulary order; "other" when all zero).
std::size_t dominant_tag(const FeatureVector& v, const TagVocabulary& vocab);

TagVocabulary fit_vocabulary(std::span<const FeatureVector> vectors,
                             std::size_t k = kTagVocabularySize);

PreprocessorParams fit(std::span<const FeatureVector> vectors);
EncodedRow transform(const FeatureVector& v, const PreprocessorParams& params);

double impute(std::optional<double> value, double median) noexcept;
std::vector<double> interpolate_history(std::span<const std::optional<double>> history);
double minmax_scale(double x, double min, double max) noexcept;
double zscore(double x, double mean, double std) noexcept;
double log_transform(double x);
std::vector<int> one_hot(std::string_view category, const TagVocabulary& vocab);

inline constexpr int kNumClasses = 4;

// Job-status labels, indexed by class.
inline constexpr std::string_view kStatusLabels[kNumClasses] = {
    "Needs further practice",
    "Entry-level positions",
    "Mid-level positions",
    "Ready for top tech companies",
};

int label_encode(std::string_view status_label);
std::string_view label_name(int status_code);

std::string fnv1a_hex(std::string_view data);

} // namespace cfready
