#include <numeric>

#include <fmt/core.h>

#include "cfready/error.hpp"
#include "cfready/models.hpp"

namespace cfready {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ModelType t) noexcept {
    switch (t) {
    case ModelType::forest: return "forest";
    case ModelType::svm: return "svm";
    case ModelType::knn: return "knn";
    }
    return "unknown";
}

ModelType model_type_from_string(std::string_view s) {
    for (auto t : {ModelType::forest, ModelType::svm, ModelType::knn})
        if (to_string(t) == s) return t;
    throw Error(Errc::invalid_argument, fmt::format("unknown model type '{}' (expected forest|svm|knn)", s));
}

ModelType model_type(const Model& m) noexcept { return static_cast<ModelType>(m.index()); }

std::size_t model_n_features(const Model& m) noexcept {
    return std::visit(
        [](const auto& x) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, KnnModel>)
                return x.rows.cols();
            else
                return x.n_features;
        },
        m);
}

const std::string& model_schema_hash(const Model& m) noexcept {
    return std::visit([](const auto& x) -> const std::string& { return x.schema_hash; }, m);
}

void set_model_schema_hash(Model& m, std::string hash) {
    std::visit([&](auto& x) { x.schema_hash = std::move(hash); }, m);
}

Model train_model(ModelType type, const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp,
                  std::size_t threads) {
    switch (type) {
    case ModelType::forest: return train_forest(rows, labels, hp, threads);
    case ModelType::svm: return train_svm(rows, labels, hp);
    case ModelType::knn: return train_knn(rows, labels, hp);
    }
    throw Error(Errc::invalid_argument, "unknown model type");
}

Prediction predict(const Model& m, std::span<const double> row) {
    return std::visit(
        [&](const auto& x) -> Prediction {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ForestModel>) {
                auto v = forest_predict(x, row);
                return Prediction{v.cls, v.vote_shares};
            } else if constexpr (std::is_same_v<T, SvmModel>) {
                return Prediction{svm_predict(x, row), std::nullopt};
            } else {
                return Prediction{knn_predict(x, row), std::nullopt};
            }
        },
        m);
}

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::corrupt_model, what); }

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

ordered_json forest_params_json(const ForestModel& m) {
    ordered_json j;
    j["n_trees"] = m.params.n_trees;
    j["max_depth"] = optional_json(m.params.max_depth);
    j["min_samples_split"] = m.params.min_samples_split;
    j["features_per_split"] = optional_json(m.params.features_per_split);
    j["bootstrap"] = m.params.bootstrap;
    j["seed"] = m.seed;
    j["class_weights"] = m.class_weights;
    return j;
}

ordered_json svm_params_json(const SvmModel& m) {
    ordered_json j;
    j["lambda"] = m.params.lambda;
    j["epochs"] = m.params.epochs;
    j["seed"] = m.seed;
    j["class_weights"] = m.class_weights;
    return j;
}

ordered_json knn_params_json(const KnnModel& m) {
    ordered_json j;
    j["k"] = m.k;
    return j;
}

ordered_json tree_json(const DecisionTree& tree) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : tree.nodes) {
        ordered_json node;
        if (!n.is_leaf()) {
            node["f"] = n.feature;
            node["t"] = n.threshold;
            node["l"] = n.left;
            node["r"] = n.right;
        }
        node["c"] = n.counts;
        nodes.push_back(std::move(node));
    }
    return nodes;
}

DecisionTree tree_from_json(const json& nodes, std::size_t n_features) {
    DecisionTree tree;
    tree.n_features = n_features;
    if (!nodes.is_array() || nodes.empty()) corrupt("tree has no nodes");
    const auto size = static_cast<std::int64_t>(nodes.size());
    std::vector<int> referenced(nodes.size(), 0);
    for (std::int64_t i = 0; i < size; ++i) {
        const auto& j = nodes[static_cast<std::size_t>(i)];
        TreeNode n;
        n.counts = j.at("c").get<ClassCounts>();
        if (j.contains("f")) {
            n.feature = j.at("f").get<std::int32_t>();
            n.threshold = j.at("t").get<double>();
            n.left = j.at("l").get<std::int32_t>();
            n.right = j.at("r").get<std::int32_t>();
            if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features)
                corrupt(fmt::format("node {} splits on invalid column {}", i, n.feature));
            for (auto child : {n.left, n.right}) {
                if (child <= i || child >= size) corrupt(fmt::format("node {} has invalid child {}", i, child));
                ++referenced[static_cast<std::size_t>(child)];
            }
        } else if (std::accumulate(n.counts.begin(), n.counts.end(), std::int64_t{0}) < 1) {
            corrupt(fmt::format("leaf {} holds no samples", i));
        }
        tree.nodes.push_back(n);
    }
    for (std::size_t i = 1; i < referenced.size(); ++i)
        if (referenced[i] != 1) corrupt(fmt::format("node {} is referenced {} times", i, referenced[i]));
    return tree;
}

ordered_json header(ModelType type, const std::string& schema_hash, std::size_t n_features) {
    ordered_json j;
    j["format"] = "cfready.model";
    j["format_version"] = 1;
    j["model_type"] = to_string(type);
    j["schema_hash"] = schema_hash;
    j["n_features"] = n_features;
    return j;
}

} // namespace

ordered_json hyperparams_to_json(const Model& m) {
    return std::visit(
        [](const auto& x) -> ordered_json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ForestModel>)
                return forest_params_json(x);
            else if constexpr (std::is_same_v<T, SvmModel>)
                return svm_params_json(x);
            else
                return knn_params_json(x);
        },
        m);
}

std::string serialize_model(const Model& m) {
    ordered_json j = header(model_type(m), model_schema_hash(m), model_n_features(m));
    j["hyperparams"] = hyperparams_to_json(m);
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ForestModel>) {
                ordered_json trees = ordered_json::array();
                for (const auto& t : x.trees) trees.push_back(tree_json(t));
                j["trees"] = std::move(trees);
            } else if constexpr (std::is_same_v<T, SvmModel>) {
                j["weights"] = x.weights;
                j["bias"] = x.bias;
                j["trained"] = x.trained;
            } else {
                ordered_json rows = ordered_json::array();
                for (std::size_t i = 0; i < x.rows.rows(); ++i) {
                    auto r = x.rows.row(i);
                    rows.push_back(std::vector<double>(r.begin(), r.end()));
                }
                j["rows"] = std::move(rows);
                j["labels"] = x.labels;
            }
        },
        m);
    return j.dump();
}

Model deserialize_model(std::string_view bytes, std::optional<std::string_view> expected_schema_hash) {
    const json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) corrupt("model document is not valid JSON");
    try {
        if (j.at("format").get<std::string>() != "cfready.model") corrupt("not a model document");
        if (j.at("format_version").get<int>() != 1) corrupt("unsupported model format version");
        const auto type = model_type_from_string(j.at("model_type").get<std::string>());
        const auto schema_hash = j.at("schema_hash").get<std::string>();
        if (expected_schema_hash && *expected_schema_hash != schema_hash)
            corrupt(fmt::format("model schema hash {} does not match {}", schema_hash, *expected_schema_hash));
        const auto n_features = j.at("n_features").get<std::size_t>();
        const auto& hp = j.at("hyperparams");

        Hyperparams check;
        switch (type) {
        case ModelType::forest: {
            ForestModel m;
            m.n_features = n_features;
            m.schema_hash = schema_hash;
            m.params.n_trees = hp.at("n_trees").get<std::size_t>();
            m.params.max_depth = optional_from<std::size_t>(hp.at("max_depth"));
            m.params.min_samples_split = hp.at("min_samples_split").get<std::size_t>();
            m.params.features_per_split = optional_from<std::size_t>(hp.at("features_per_split"));
            m.params.bootstrap = hp.at("bootstrap").get<bool>();
            m.seed = hp.at("seed").get<std::uint64_t>();
            m.class_weights = hp.at("class_weights").get<ClassWeights>();
            check.forest = m.params;
            check.class_weights = m.class_weights;
            check.validate();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, n_features));
            if (m.trees.size() != m.params.n_trees) corrupt("tree count does not match n_trees");
            return m;
        }
        case ModelType::svm: {
            SvmModel m;
            m.n_features = n_features;
            m.schema_hash = schema_hash;
            m.params.lambda = hp.at("lambda").get<double>();
            m.params.epochs = hp.at("epochs").get<std::size_t>();
            m.seed = hp.at("seed").get<std::uint64_t>();
            m.class_weights = hp.at("class_weights").get<ClassWeights>();
            check.svm = m.params;
            check.class_weights = m.class_weights;
            check.validate();
            m.weights = j.at("weights").get<std::array<std::vector<double>, kNumClasses>>();
            m.bias = j.at("bias").get<std::array<double, kNumClasses>>();
            m.trained = j.at("trained").get<std::array<bool, kNumClasses>>();
            for (const auto& w : m.weights)
                if (w.size() != n_features) corrupt("svm weight vector has the wrong length");
            return m;
        }
        case ModelType::knn: {
            KnnModel m;
            m.schema_hash = schema_hash;
            m.k = hp.at("k").get<std::size_t>();
            m.rows = RowMatrix(n_features);
            for (const auto& r : j.at("rows")) {
                const auto row = r.get<std::vector<double>>();
                if (row.size() != n_features) corrupt("knn row has the wrong length");
                m.rows.push_back(row);
            }
            m.labels = j.at("labels").get<std::vector<int>>();
            check_labels(m.labels, m.rows.rows());
            if (m.k < 1 || m.k > m.rows.rows()) corrupt("knn k exceeds stored rows");
            return m;
        }
        }
    } catch (const json::exception& e) {
        corrupt(fmt::format("malformed model document: {}", e.what()));
    } catch (const Error& e) {
        if (e.code() == Errc::corrupt_model) throw;
        corrupt(e.what());
    }
    corrupt("unreachable model type");
}

} // namespace cfready
