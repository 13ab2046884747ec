#include "cfready/preprocessing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include <fmt/core.h>

#include "cfready/error.hpp"

namespace cfready {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ScalePolicy p) noexcept {
    switch (p) {
    case ScalePolicy::minmax: return "minmax";
    case ScalePolicy::zscore: return "zscore";
    case ScalePolicy::log_then_minmax: return "log_then_minmax";
    case ScalePolicy::passthrough: return "passthrough";
    }
    return "unknown";
}

ScalePolicy scale_policy_from_string(std::string_view s) {
    for (auto p : {ScalePolicy::minmax, ScalePolicy::zscore, ScalePolicy::log_then_minmax,
                   ScalePolicy::passthrough})
        if (to_string(p) == s) return p;
    throw Error(Errc::corrupt_model, fmt::format("unknown scale policy '{}'", s));
}

namespace {

struct ScalarField {
    std::string_view name;
    ScalePolicy policy;
    bool optional;
    std::optional<double> (*get)(const FeatureVector&);
};

template <typename T>
std::optional<double> as_opt(T v) {
    return static_cast<double>(v);
}

// Ratings-scale values use min-max, rank-like values z-score, heavy-tailed
// counts and rates log1p then min-max.
const ScalarField kScalarFields[] = {
    {"best_rating", ScalePolicy::minmax, true, [](const FeatureVector& v) { return v.best_rating; }},
    {"avg_problem_rating", ScalePolicy::minmax, true, [](const FeatureVector& v) { return v.avg_problem_rating; }},
    {"rating_progression", ScalePolicy::minmax, false, [](const FeatureVector& v) { return as_opt(v.rating_progression); }},
    {"best_rank", ScalePolicy::zscore, true, [](const FeatureVector& v) { return v.best_rank; }},
    {"avg_rank", ScalePolicy::zscore, true, [](const FeatureVector& v) { return v.avg_rank; }},
    {"improvement_rate", ScalePolicy::zscore, false, [](const FeatureVector& v) { return as_opt(v.improvement_rate); }},
    {"total_problems_solved", ScalePolicy::log_then_minmax, false, [](const FeatureVector& v) { return as_opt(v.total_problems_solved); }},
    {"total_contests", ScalePolicy::log_then_minmax, false, [](const FeatureVector& v) { return as_opt(v.total_contests); }},
    {"total_submissions", ScalePolicy::log_then_minmax, false, [](const FeatureVector& v) { return as_opt(v.total_submissions); }},
    {"submissions_per_day", ScalePolicy::log_then_minmax, false, [](const FeatureVector& v) { return as_opt(v.submissions_per_day); }},
    {"days_active", ScalePolicy::log_then_minmax, false, [](const FeatureVector& v) { return as_opt(v.days_active); }},
    {"contests_per_month", ScalePolicy::log_then_minmax, false, [](const FeatureVector& v) { return as_opt(v.contests_per_month); }},
    {"acceptance_ratio", ScalePolicy::passthrough, true, [](const FeatureVector& v) { return v.acceptance_ratio; }},
};

constexpr std::string_view kDifficultyPrefix = "difficulty.";
constexpr std::string_view kTagPrefix = "tag.";

double folded_tag_count(const FeatureVector& v, std::size_t slot, const TagVocabulary& vocab) {
    if (slot != vocab.other_index()) {
        auto it = v.solved_by_tag.find(vocab.entries()[slot]);
        return it == v.solved_by_tag.end() ? 0.0 : static_cast<double>(it->second);
    }
    double other = 0.0;
    for (const auto& [tag, count] : v.solved_by_tag)
        if (vocab.index_of(tag) == vocab.other_index()) other += static_cast<double>(count);
    return other;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string lower_trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> schema_for(const std::vector<FeatureColumn>& columns, const TagVocabulary& vocab) {
    std::vector<std::string> schema;
    schema.reserve(columns.size() + vocab.size());
    for (const auto& c : columns) schema.push_back(c.name);
    for (const auto& t : vocab.entries()) schema.push_back(std::string(kDominantTagPrefix) + t);
    return schema;
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::corrupt_model, what); }

} // namespace

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return fmt::format("{:016x}", h);
}

std::vector<FeatureColumn> feature_layout(const TagVocabulary& vocab) {
    std::vector<FeatureColumn> cols;
    for (const auto& f : kScalarFields) cols.push_back({std::string(f.name), f.policy, f.optional, {}});
    for (auto band : kDifficultyNames)
        cols.push_back({std::string(kDifficultyPrefix) + std::string(band), ScalePolicy::log_then_minmax, false, {}});
    for (const auto& t : vocab.entries())
        cols.push_back({std::string(kTagPrefix) + t, ScalePolicy::log_then_minmax, false, {}});
    return cols;
}

std::optional<double> raw_feature(const FeatureVector& v, std::string_view column, const TagVocabulary& vocab) {
    for (const auto& f : kScalarFields)
        if (f.name == column) return f.get(v);
    if (column.starts_with(kDifficultyPrefix)) {
        const auto band = column.substr(kDifficultyPrefix.size());
        for (std::size_t b = 0; b < kDifficultyBuckets; ++b)
            if (kDifficultyNames[b] == band) return static_cast<double>(v.solved_by_difficulty[b]);
    }
    if (column.starts_with(kTagPrefix)) {
        const auto tag = column.substr(kTagPrefix.size());
        const auto slot = vocab.index_of(tag);
        if (slot != vocab.other_index() || tag == kOtherTag) return folded_tag_count(v, slot, vocab);
    }
    throw Error(Errc::schema_mismatch, fmt::format("feature vector has no column '{}'", column));
}

std::size_t dominant_tag(const FeatureVector& v, const TagVocabulary& vocab) {
    std::size_t best = vocab.other_index();
    double best_count = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        const double c = folded_tag_count(v, i, vocab);
        if (c > best_count) {
            best = i;
            best_count = c;
        }
    }
    return best;
}

TagVocabulary fit_vocabulary(std::span<const FeatureVector> vectors, std::size_t k) {
    std::unordered_map<std::string, std::int64_t> totals;
    for (const auto& v : vectors)
        for (const auto& [tag, count] : v.solved_by_tag)
            if (tag != kOtherTag && count > 0) totals[tag] += count;
    std::vector<std::pair<std::string, std::int64_t>> ranked(totals.begin(), totals.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> top;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) top.push_back(ranked[i].first);
    return TagVocabulary(std::move(top));
}

PreprocessorParams fit(std::span<const FeatureVector> vectors) {
    if (vectors.size() < 2)
        throw Error(Errc::insufficient_data, fmt::format("fit needs at least 2 vectors, got {}", vectors.size()));

    PreprocessorParams params;
    params.vocab = fit_vocabulary(vectors);
    params.columns = feature_layout(params.vocab);

    const double n = static_cast<double>(vectors.size());
    for (auto& col : params.columns) {
        std::vector<std::optional<double>> raw;
        std::vector<double> present;
        raw.reserve(vectors.size());
        for (const auto& v : vectors) {
            raw.push_back(raw_feature(v, col.name, params.vocab));
            if (raw.back()) present.push_back(*raw.back());
        }
        if (present.empty())
            throw Error(Errc::degenerate_input, fmt::format("feature '{}' is absent in every vector", col.name));

        auto& st = col.stats;
        st.median = median_of(present);
        std::vector<double> values;
        values.reserve(raw.size());
        for (const auto& r : raw) {
            const double x = impute(r, st.median);
            values.push_back(col.policy == ScalePolicy::log_then_minmax ? log_transform(x) : x);
        }
        auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        st.min = *lo;
        st.max = *hi;
        double sum = 0.0;
        for (double x : values) sum += x;
        st.mean = sum / n;
        double ss = 0.0;
        for (double x : values) ss += (x - st.mean) * (x - st.mean);
        st.std = std::sqrt(ss / n);
    }
    params.schema = schema_for(params.columns, params.vocab);
    return params;
}

EncodedRow transform(const FeatureVector& v, const PreprocessorParams& params) {
    EncodedRow row;
    row.reserve(params.schema.size());
    for (const auto& col : params.columns) {
        const double x = impute(raw_feature(v, col.name, params.vocab), col.stats.median);
        const auto& st = col.stats;
        switch (col.policy) {
        case ScalePolicy::minmax: row.push_back(minmax_scale(x, st.min, st.max)); break;
        case ScalePolicy::zscore: row.push_back(zscore(x, st.mean, st.std)); break;
        case ScalePolicy::log_then_minmax: row.push_back(minmax_scale(log_transform(x), st.min, st.max)); break;
        case ScalePolicy::passthrough: row.push_back(x); break;
        }
        if (!std::isfinite(row.back()))
            throw Error(Errc::invalid_argument, fmt::format("column '{}' produced a non-finite value", col.name));
    }
    const auto hot = dominant_tag(v, params.vocab);
    for (std::size_t i = 0; i < params.vocab.size(); ++i) row.push_back(i == hot ? 1.0 : 0.0);
    if (row.size() != params.schema.size())
        throw Error(Errc::schema_mismatch, fmt::format("encoded {} values for a {}-column schema", row.size(),
                                                       params.schema.size()));
    return row;
}

double impute(std::optional<double> value, double median) noexcept { return value ? *value : median; }

std::vector<double> interpolate_history(std::span<const std::optional<double>> history) {
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < history.size(); ++i)
        if (history[i]) present.push_back(i);
    if (present.empty()) throw Error(Errc::empty_history, "rating history has no present value");

    std::vector<double> out(history.size());
    for (std::size_t i = 0; i < present.front(); ++i) out[i] = *history[present.front()];
    for (std::size_t i = present.back(); i < history.size(); ++i) out[i] = *history[present.back()];
    for (std::size_t p = 0; p + 1 < present.size(); ++p) {
        const std::size_t a = present[p];
        const std::size_t b = present[p + 1];
        const double ya = *history[a];
        const double yb = *history[b];
        out[a] = ya;
        for (std::size_t i = a + 1; i < b; ++i)
            out[i] = ya + (yb - ya) * static_cast<double>(i - a) / static_cast<double>(b - a);
    }
    return out;
}

double minmax_scale(double x, double min, double max) noexcept {
    if (max <= min) return 0.0;
    return std::clamp((x - min) / (max - min), 0.0, 1.0);
}

double zscore(double x, double mean, double std) noexcept {
    if (std <= 0.0) return 0.0;
    return (x - mean) / std;
}

double log_transform(double x) {
    if (x < 0.0) throw Error(Errc::negative_input, fmt::format("log transform of negative value {}", x));
    return std::log1p(x);
}

std::vector<int> one_hot(std::string_view category, const TagVocabulary& vocab) {
    std::vector<int> out(vocab.size(), 0);
    out[vocab.index_of(category)] = 1;
    return out;
}

int label_encode(std::string_view status_label) {
    const auto wanted = lower_trim(status_label);
    for (int c = 0; c < kNumClasses; ++c)
        if (lower_trim(kStatusLabels[c]) == wanted) return c;
    throw Error(Errc::unknown_label, fmt::format("unknown job status '{}'", status_label));
}

std::string_view label_name(int status_code) {
    if (status_code < 0 || status_code >= kNumClasses)
        throw Error(Errc::unknown_label, fmt::format("status code {} outside 0..3", status_code));
    return kStatusLabels[status_code];
}

std::string PreprocessorParams::schema_hash() const {
    std::string joined;
    for (const auto& s : schema) {
        joined += s;
        joined += '\n';
    }
    return fnv1a_hex(joined);
}

ordered_json PreprocessorParams::to_json() const {
    ordered_json j;
    j["format"] = "cfready.preprocessor";
    j["format_version"] = 1;
    j["schema_hash"] = schema_hash();
    j["schema"] = schema;
    std::vector<std::string> top(vocab.entries().begin(), vocab.entries().end() - 1);
    j["vocabulary"] = top;
    ordered_json cols = ordered_json::array();
    for (const auto& c : columns) {
        ordered_json col;
        col["name"] = c.name;
        col["policy"] = to_string(c.policy);
        col["optional"] = c.optional;
        col["min"] = c.stats.min;
        col["max"] = c.stats.max;
        col["mean"] = c.stats.mean;
        col["std"] = c.stats.std;
        col["median"] = c.stats.median;
        cols.push_back(std::move(col));
    }
    j["columns"] = std::move(cols);
    return j;
}

PreprocessorParams PreprocessorParams::from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "cfready.preprocessor") corrupt("not a preprocessor document");
        PreprocessorParams p;
        p.vocab = TagVocabulary(j.at("vocabulary").get<std::vector<std::string>>());
        for (const auto& c : j.at("columns")) {
            FeatureColumn col;
            col.name = c.at("name").get<std::string>();
            col.policy = scale_policy_from_string(c.at("policy").get<std::string>());
            col.optional = c.at("optional").get<bool>();
            col.stats.min = c.at("min").get<double>();
            col.stats.max = c.at("max").get<double>();
            col.stats.mean = c.at("mean").get<double>();
            col.stats.std = c.at("std").get<double>();
            col.stats.median = c.at("median").get<double>();
            if (col.stats.max < col.stats.min || col.stats.std < 0)
                corrupt(fmt::format("column '{}' has inconsistent statistics", col.name));
            p.columns.push_back(std::move(col));
        }
        p.schema = j.at("schema").get<std::vector<std::string>>();
        if (p.schema != schema_for(p.columns, p.vocab)) corrupt("schema does not match columns and vocabulary");
        if (j.at("schema_hash").get<std::string>() != p.schema_hash()) corrupt("preprocessor schema hash mismatch");
        return p;
    } catch (const json::exception& e) {
        corrupt(fmt::format("malformed preprocessor document: {}", e.what()));
    } catch (const Error& e) {
        if (e.code() == Errc::corrupt_model) throw;
        corrupt(e.what());
    }
}

} // namespace cfready
