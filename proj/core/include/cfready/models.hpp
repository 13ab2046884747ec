#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfready/matrix.hpp"
#include "cfready/preprocessing.hpp"

namespace cfready {

using ClassCounts = std::array<std::int64_t, kNumClasses>;
using ClassWeights = std::array<double, kNumClasses>;
using ClassShares = std::array<double, kNumClasses>;

inline constexpr ClassWeights kUniformWeights{1.0, 1.0, 1.0, 1.0};

struct ForestParams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth;           // unlimited when absent
    std::size_t min_samples_split = 2;
    std::optional<std::size_t> features_per_split;  // ceil(sqrt(d)) when absent
    bool bootstrap = true;

    bool operator==(const ForestParams&) const = default;
};

struct SvmParams {
    double lambda = 1e-4;
    std::size_t epochs = 50;

    bool operator==(const SvmParams&) const = default;
};

struct KnnParams {
    std::size_t k = 5;

    bool operator==(const KnnParams&) const = default;
};

struct Hyperparams {
    ForestParams forest;
    SvmParams svm;
    KnnParams knn;
    std::uint64_t seed = 0;
    // Scales leaf counts and hinge losses per class. Off (all ones) by default.
    ClassWeights class_weights = kUniformWeights;

    // Throws Error(invalid_argument) when an invariant is violated.
    void validate() const;

    bool operator==(const Hyperparams&) const = default;
};

// ---------------------------------------------------------------------------
// Decision trees

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // rows go left iff value <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    ClassCounts counts{};       // training samples reaching this node

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

// Nodes in preorder; nodes[0] is the root and children always follow parents.
struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::size_t n_features = 0;

    bool operator==(const DecisionTree&) const = default;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

struct TreePrediction {
    int cls = 0;
    ClassCounts counts{};
};

// 1 - sum p_i^2. Throws Error(empty_node) on an empty count vector.
double gini(const ClassCounts& counts, const ClassWeights& weights = kUniformWeights);

// Exhaustive scan of midpoints between consecutive distinct values over the
// candidate features; nullopt when nothing decreases weighted Gini.
std::optional<Split> best_split(const RowMatrix& rows, std::span<const int> labels,
                                std::span<const std::size_t> samples,
                                std::span<const std::size_t> candidate_features,
                                const ClassWeights& weights = kUniformWeights);
std::optional<Split> best_split(const RowMatrix& rows, std::span<const int> labels,
                                std::span<const std::size_t> candidate_features);

DecisionTree build_tree(const RowMatrix& rows, std::span<const int> labels,
                        std::span<const std::size_t> samples, const ForestParams& params,
                        std::mt19937_64& rng, const ClassWeights& weights = kUniformWeights);
DecisionTree build_tree(const RowMatrix& rows, std::span<const int> labels,
                        const ForestParams& params, std::mt19937_64& rng);

TreePrediction tree_predict(const DecisionTree& tree, std::span<const double> row,
                            const ClassWeights& weights = kUniformWeights);

// Argmax with ties going to the lowest class index.
template <typename Scores>
int argmax_class(const Scores& scores) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(scores.size()); ++c)
        if (scores[c] > scores[best]) best = c;
    return best;
}

// ---------------------------------------------------------------------------
// Random forest

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::size_t n_features = 0;
    ForestParams params;
    std::uint64_t seed = 0;
    ClassWeights class_weights = kUniformWeights;
    std::string schema_hash;

    bool operator==(const ForestModel&) const = default;
};

struct ForestVote {
    int cls = 0;
    ClassShares vote_shares{};
};

// Generator for tree `index`, derived from (seed, index) only.
std::mt19937_64 tree_rng(std::uint64_t seed, std::size_t index);

// Trees may be built on `threads` workers; output does not depend on it.
ForestModel train_forest(const RowMatrix& rows, std::span<const int> labels,
                         const Hyperparams& hp, std::size_t threads = 1);
ForestVote forest_predict(const ForestModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// Linear one-vs-rest SVM

struct SvmModel {
    std::array<std::vector<double>, kNumClasses> weights;
    std::array<double, kNumClasses> bias{};
    // Classes never seen in training are never predicted.
    std::array<bool, kNumClasses> trained{true, true, true, true};
    std::size_t n_features = 0;
    SvmParams params;
    std::uint64_t seed = 0;
    ClassWeights class_weights = kUniformWeights;
    std::string schema_hash;

    bool operator==(const SvmModel&) const = default;
};

SvmModel train_svm(const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp);
std::array<double, kNumClasses> svm_decision_values(const SvmModel& model, std::span<const double> row);
int svm_predict(const SvmModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// k-nearest neighbours

struct KnnModel {
    RowMatrix rows;
    std::vector<int> labels;
    std::size_t k = 5;
    std::string schema_hash;

    bool operator==(const KnnModel&) const = default;
};

KnnModel train_knn(const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp);
int knn_predict(const KnnModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// Polymorphic model handling and serialization

enum class ModelType { forest, svm, knn };

std::string_view to_string(ModelType t) noexcept;
ModelType model_type_from_string(std::string_view s);

using Model = std::variant<ForestModel, SvmModel, KnnModel>;

struct Prediction {
    int cls = 0;
    std::optional<ClassShares> vote_shares;  // forest only
};

ModelType model_type(const Model& m) noexcept;
std::size_t model_n_features(const Model& m) noexcept;
const std::string& model_schema_hash(const Model& m) noexcept;
void set_model_schema_hash(Model& m, std::string hash);

Model train_model(ModelType type, const RowMatrix& rows, std::span<const int> labels,
                  const Hyperparams& hp, std::size_t threads = 1);
Prediction predict(const Model& m, std::span<const double> row);

nlohmann::ordered_json hyperparams_to_json(const Model& m);

// Self-describing compact JSON document; equal models give equal bytes.
std::string serialize_model(const Model& m);
// Throws Error(corrupt_model) on parse/structure errors or when
// `expected_schema_hash` is given and differs.
Model deserialize_model(std::string_view bytes,
                        std::optional<std::string_view> expected_schema_hash = std::nullopt);

void check_labels(std::span<const int> labels, std::size_t rows);

} // namespace cfready
