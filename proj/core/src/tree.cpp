#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "cfready/error.hpp"
#include "cfready/models.hpp"

namespace cfready {

RowMatrix RowMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    RowMatrix m(rows.empty() ? 0 : rows.front().size());
    for (const auto& r : rows) m.push_back(r);
    return m;
}

void RowMatrix::push_back(std::span<const double> row) {
    if (values_.empty() && cols_ == 0) cols_ = row.size();
    if (row.size() != cols_)
        throw Error(Errc::schema_mismatch, fmt::format("row of length {} in a {}-column matrix", row.size(), cols_));
    values_.insert(values_.end(), row.begin(), row.end());
}

RowMatrix RowMatrix::select(std::span<const std::size_t> indices) const {
    RowMatrix out(cols_);
    out.values_.reserve(indices.size() * cols_);
    for (auto i : indices) out.push_back(row(i));
    return out;
}

void Hyperparams::validate() const {
    if (forest.n_trees < 1) throw Error(Errc::invalid_argument, "n_trees must be >= 1");
    if (forest.min_samples_split < 2) throw Error(Errc::invalid_argument, "min_samples_split must be >= 2");
    if (forest.features_per_split && *forest.features_per_split < 1)
        throw Error(Errc::invalid_argument, "features_per_split must be >= 1");
    if (knn.k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
    if (!(svm.lambda > 0.0)) throw Error(Errc::invalid_argument, "lambda must be > 0");
    if (svm.epochs < 1) throw Error(Errc::invalid_argument, "epochs must be >= 1");
    for (double w : class_weights)
        if (!(w > 0.0) || !std::isfinite(w)) throw Error(Errc::invalid_argument, "class weights must be positive");
}

void check_labels(std::span<const int> labels, std::size_t rows) {
    if (labels.size() != rows)
        throw Error(Errc::length_mismatch, fmt::format("{} labels for {} rows", labels.size(), rows));
    for (int l : labels)
        if (l < 0 || l >= kNumClasses) throw Error(Errc::unknown_label, fmt::format("class {} outside 0..3", l));
}

namespace {

using WeightedCounts = std::array<double, kNumClasses>;

double weighted_gini(const WeightedCounts& w, double total) noexcept {
    double sum_sq = 0.0;
    for (double x : w) sum_sq += (x / total) * (x / total);
    return 1.0 - sum_sq;
}

// Splits must beat this to count as a decrease; absorbs rounding noise.
constexpr double kMinDecrease = 1e-12;

std::optional<Split> scan_splits(const RowMatrix& rows, std::span<const int> labels,
                                 std::span<const std::size_t> samples,
                                 std::span<const std::size_t> candidate_features,
                                 const ClassWeights& weights, double min_decrease);

class TreeBuilder {
public:
    TreeBuilder(const RowMatrix& rows, std::span<const int> labels, const ForestParams& params,
                std::mt19937_64& rng, const ClassWeights& weights)
        : rows_(rows), labels_(labels), params_(params), rng_(rng), weights_(weights) {
        const std::size_t d = rows.cols();
        const auto default_m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
        features_per_split_ = std::clamp<std::size_t>(params.features_per_split.value_or(default_m), 1, std::max<std::size_t>(d, 1));
        feature_order_.resize(d);
    }

    DecisionTree build(std::vector<std::size_t> samples) {
        tree_.n_features = rows_.cols();
        grow(samples, 0);
        return std::move(tree_);
    }

private:
    std::int32_t grow(std::span<std::size_t> samples, std::size_t depth) {
        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        ClassCounts counts{};
        for (auto s : samples) ++counts[labels_[s]];
        tree_.nodes[id].counts = counts;

        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
        const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
        if (pure || depth_reached || samples.size() < params_.min_samples_split) return id;

        auto split = find_split(samples);
        if (!split) split = zero_gain_split(samples);
        if (!split) return id;

        auto mid = std::partition(samples.begin(), samples.end(), [&](std::size_t s) {
            return rows_.at(s, split->feature) <= split->threshold;
        });
        const auto n_left = static_cast<std::size_t>(mid - samples.begin());

        const auto left = grow(samples.first(n_left), depth + 1);
        const auto right = grow(samples.subspan(n_left), depth + 1);
        auto& node = tree_.nodes[id];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    // Draws features_per_split candidates; when none of them can split, the
    // remaining features are tried before giving up on the node.
    std::optional<Split> find_split(std::span<const std::size_t> samples) {
        const std::size_t d = feature_order_.size();
        std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
        const std::size_t m = features_per_split_;
        if (m >= d) return best_split(rows_, labels_, samples, feature_order_, weights_);

        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, d - 1);
            std::swap(feature_order_[i], feature_order_[pick(rng_)]);
        }
        std::span<const std::size_t> order(feature_order_);
        if (auto s = best_split(rows_, labels_, samples, order.first(m), weights_)) return s;
        return best_split(rows_, labels_, samples, order.subspan(m), weights_);
    }

    // An impure node where no single cut lowers Gini (XOR-like layouts) still
    // gets split on the least harmful cut, so deeper levels can separate it.
    std::optional<Split> zero_gain_split(std::span<const std::size_t> samples) {
        std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
        return scan_splits(rows_, labels_, samples, feature_order_, weights_,
                           -std::numeric_limits<double>::infinity());
    }

    const RowMatrix& rows_;
    std::span<const int> labels_;
    const ForestParams& params_;
    std::mt19937_64& rng_;
    const ClassWeights& weights_;
    std::size_t features_per_split_ = 1;
    std::vector<std::size_t> feature_order_;
    DecisionTree tree_;
};

} // namespace

double gini(const ClassCounts& counts, const ClassWeights& weights) {
    WeightedCounts w{};
    double total = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        if (counts[c] < 0) throw Error(Errc::invalid_argument, "negative class count");
        w[c] = static_cast<double>(counts[c]) * weights[c];
        total += w[c];
    }
    if (total <= 0.0) throw Error(Errc::empty_node, "gini of an empty node");
    return weighted_gini(w, total);
}

namespace {

std::optional<Split> scan_splits(const RowMatrix& rows, std::span<const int> labels,
                                 std::span<const std::size_t> samples,
                                 std::span<const std::size_t> candidate_features,
                                 const ClassWeights& weights, double min_decrease) {
    if (samples.size() < 2) return std::nullopt;

    WeightedCounts parent{};
    for (auto s : samples) parent[labels[s]] += weights[labels[s]];
    const double total = std::accumulate(parent.begin(), parent.end(), 0.0);
    const double parent_gini = weighted_gini(parent, total);
    if (parent_gini <= 0.0) return std::nullopt;

    std::optional<Split> best;
    double best_decrease = min_decrease;
    std::vector<std::pair<double, int>> column(samples.size());

    for (auto f : candidate_features) {
        for (std::size_t i = 0; i < samples.size(); ++i)
            column[i] = {rows.at(samples[i], f), labels[samples[i]]};
        std::sort(column.begin(), column.end());

        WeightedCounts left{};
        double left_total = 0.0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            const double w = weights[column[i].second];
            left[column[i].second] += w;
            left_total += w;
            const double a = column[i].first;
            const double b = column[i + 1].first;
            if (!(a < b)) continue;

            WeightedCounts right{};
            for (int c = 0; c < kNumClasses; ++c) right[c] = parent[c] - left[c];
            const double right_total = total - left_total;
            const double child = (left_total * weighted_gini(left, left_total) +
                                  right_total * weighted_gini(right, right_total)) / total;
            const double decrease = parent_gini - child;
            if (decrease > best_decrease) {
                double threshold = a + (b - a) / 2.0;
                if (!(threshold < b)) threshold = a;  // adjacent doubles
                best_decrease = decrease;
                best = Split{f, threshold, decrease};
            }
        }
    }
    return best;
}

} // namespace

std::optional<Split> best_split(const RowMatrix& rows, std::span<const int> labels,
                                std::span<const std::size_t> samples,
                                std::span<const std::size_t> candidate_features,
                                const ClassWeights& weights) {
    return scan_splits(rows, labels, samples, candidate_features, weights, kMinDecrease);
}

std::optional<Split> best_split(const RowMatrix& rows, std::span<const int> labels,
                                std::span<const std::size_t> candidate_features) {
    std::vector<std::size_t> all(rows.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return best_split(rows, labels, all, candidate_features);
}

DecisionTree build_tree(const RowMatrix& rows, std::span<const int> labels,
                        std::span<const std::size_t> samples, const ForestParams& params,
                        std::mt19937_64& rng, const ClassWeights& weights) {
    check_labels(labels, rows.rows());
    if (samples.empty()) throw Error(Errc::insufficient_data, "cannot build a tree from zero rows");
    TreeBuilder builder(rows, labels, params, rng, weights);
    return builder.build(std::vector<std::size_t>(samples.begin(), samples.end()));
}

DecisionTree build_tree(const RowMatrix& rows, std::span<const int> labels, const ForestParams& params,
                        std::mt19937_64& rng) {
    std::vector<std::size_t> all(rows.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return build_tree(rows, labels, all, params, rng);
}

TreePrediction tree_predict(const DecisionTree& tree, std::span<const double> row, const ClassWeights& weights) {
    if (row.size() != tree.n_features)
        throw Error(Errc::schema_mismatch,
                    fmt::format("row has {} values, tree expects {}", row.size(), tree.n_features));
    std::size_t i = 0;
    while (!tree.nodes[i].is_leaf()) {
        const auto& n = tree.nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    TreePrediction p;
    p.counts = tree.nodes[i].counts;
    std::array<double, kNumClasses> scores{};
    for (int c = 0; c < kNumClasses; ++c) scores[c] = static_cast<double>(p.counts[c]) * weights[c];
    p.cls = argmax_class(scores);
    return p;
}

} // namespace cfready
