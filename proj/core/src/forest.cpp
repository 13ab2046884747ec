#include <algorithm>
#include <numeric>
#include <thread>

#include <fmt/core.h>

#include "cfready/error.hpp"
#include "cfready/models.hpp"

namespace cfready {

std::mt19937_64 tree_rng(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x7265u};
    return std::mt19937_64(seq);
}

namespace {

DecisionTree grow_member(const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp,
                         std::size_t index) {
    auto rng = tree_rng(hp.seed, index);
    const std::size_t n = rows.rows();
    std::vector<std::size_t> sample(n);
    if (hp.forest.bootstrap) {
        std::uniform_int_distribution<std::size_t> draw(0, n - 1);
        for (auto& s : sample) s = draw(rng);
    } else {
        std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    return build_tree(rows, labels, sample, hp.forest, rng, hp.class_weights);
}

} // namespace

ForestModel train_forest(const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp,
                         std::size_t threads) {
    hp.validate();
    if (rows.rows() < 2)
        throw Error(Errc::insufficient_data, fmt::format("forest needs at least 2 rows, got {}", rows.rows()));
    check_labels(labels, rows.rows());

    ForestModel model;
    model.n_features = rows.cols();
    model.params = hp.forest;
    model.seed = hp.seed;
    model.class_weights = hp.class_weights;
    model.trees.resize(hp.forest.n_trees);

    threads = std::clamp<std::size_t>(threads, 1, hp.forest.n_trees);
    if (threads == 1) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) model.trees[t] = grow_member(rows, labels, hp, t);
        return model;
    }
    // Strided assignment; each tree depends only on (seed, index).
    std::vector<std::jthread> workers;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t t = w; t < model.trees.size(); t += threads)
                    model.trees[t] = grow_member(rows, labels, hp, t);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    workers.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return model;
}

ForestVote forest_predict(const ForestModel& model, std::span<const double> row) {
    if (row.size() != model.n_features)
        throw Error(Errc::schema_mismatch,
                    fmt::format("row has {} values, forest expects {}", row.size(), model.n_features));
    std::array<std::size_t, kNumClasses> votes{};
    for (const auto& tree : model.trees) ++votes[tree_predict(tree, row, model.class_weights).cls];

    ForestVote v;
    const double n = static_cast<double>(model.trees.size());
    for (int c = 0; c < kNumClasses; ++c) v.vote_shares[c] = static_cast<double>(votes[c]) / n;
    v.cls = argmax_class(votes);
    return v;
}

} // namespace cfready
