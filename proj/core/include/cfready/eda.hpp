#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfready/features.hpp"
#include "cfready/preprocessing.hpp"

namespace cfready {

inline constexpr int kHistogramBinWidth = 100;

struct HistogramBin {
    int lower = 0;  // covers [lower, lower + kHistogramBinWidth)
    std::int64_t count = 0;

    bool operator==(const HistogramBin&) const = default;
};

struct BoxStats {
    std::size_t n = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct ScatterSeries {
    std::string x;
    std::string y;
    std::vector<std::pair<double, double>> points;  // rows where both are present
    std::vector<int> labels;                        // parallel to points
};

struct EdaSummary {
    std::size_t samples = 0;
    std::vector<HistogramBin> rating_histogram;  // contiguous, users without a rating skipped
    std::vector<std::pair<std::int64_t, std::int64_t>> contests_vs_solved;
    std::vector<std::string> correlation_columns;
    std::vector<std::vector<double>> correlation;  // Pearson, 0 where a column is constant
    std::vector<std::pair<std::string, std::int64_t>> top_tags;
    std::array<std::optional<BoxStats>, kNumClasses> rating_by_class;
    std::vector<ScatterSeries> scatter;

    nlohmann::ordered_json to_json() const;
    // File name -> CSV text, one flat table per section.
    std::map<std::string, std::string> csv_tables() const;
};

inline const std::vector<std::string> kDefaultScatterFeatures{
    "best_rating", "total_problems_solved", "total_contests", "acceptance_ratio"};

// Throws Error(insufficient_data) below two vectors, Error(length_mismatch)
// when labels are not parallel, Error(schema_mismatch) on an unknown scatter feature.
EdaSummary eda_summary(std::span<const FeatureVector> vectors, std::span<const int> labels,
                       const std::vector<std::string>& scatter_features = kDefaultScatterFeatures);

// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Linear-interpolation quantile of sorted data (q in [0,1]).
double quantile_sorted(std::span<const double> sorted, double q);

} // namespace cfready
