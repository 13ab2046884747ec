#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "cfready/error.hpp"
#include "cfready/models.hpp"

namespace cfready {

namespace {

// Pegasos on the augmented input [x, 1]; the bias is the last weight and is
// regularised along with the rest.
std::vector<double> train_binary(const RowMatrix& rows, std::span<const int> labels, int positive,
                                 const Hyperparams& hp) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.cols();
    const double lambda = hp.svm.lambda;
    const double radius = 1.0 / std::sqrt(lambda);

    std::vector<double> w(d + 1, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(hp.seed), static_cast<std::uint32_t>(hp.seed >> 32),
                      static_cast<std::uint32_t>(positive), 0x5f3u};
    std::mt19937_64 rng(seq);

    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < hp.svm.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const auto x = rows.row(i);
            const double y = labels[i] == positive ? 1.0 : -1.0;

            double score = w[d];
            for (std::size_t k = 0; k < d; ++k) score += w[k] * x[k];

            const double shrink = 1.0 - eta * lambda;
            for (auto& wk : w) wk *= shrink;
            if (y * score < 1.0) {
                const double step = eta * y * hp.class_weights[labels[i]];
                for (std::size_t k = 0; k < d; ++k) w[k] += step * x[k];
                w[d] += step;
            }

            double norm_sq = 0.0;
            for (double wk : w) norm_sq += wk * wk;
            if (norm_sq > radius * radius) {
                const double scale = radius / std::sqrt(norm_sq);
                for (auto& wk : w) wk *= scale;
            }
        }
    }
    return w;
}

} // namespace

SvmModel train_svm(const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp) {
    hp.validate();
    if (rows.rows() < 2)
        throw Error(Errc::insufficient_data, fmt::format("svm needs at least 2 rows, got {}", rows.rows()));
    check_labels(labels, rows.rows());

    SvmModel model;
    model.n_features = rows.cols();
    model.params = hp.svm;
    model.seed = hp.seed;
    model.class_weights = hp.class_weights;
    for (int c = 0; c < kNumClasses; ++c) {
        model.trained[c] = std::find(labels.begin(), labels.end(), c) != labels.end();
        if (!model.trained[c]) {
            model.weights[c].assign(model.n_features, 0.0);
            model.bias[c] = 0.0;
            continue;
        }
        auto w = train_binary(rows, labels, c, hp);
        model.bias[c] = w.back();
        w.pop_back();
        model.weights[c] = std::move(w);
    }
    return model;
}

std::array<double, kNumClasses> svm_decision_values(const SvmModel& model, std::span<const double> row) {
    if (row.size() != model.n_features)
        throw Error(Errc::schema_mismatch,
                    fmt::format("row has {} values, svm expects {}", row.size(), model.n_features));
    std::array<double, kNumClasses> values{};
    for (int c = 0; c < kNumClasses; ++c) {
        if (!model.trained[c]) {
            values[c] = -std::numeric_limits<double>::infinity();
            continue;
        }
        double v = model.bias[c];
        for (std::size_t k = 0; k < row.size(); ++k) v += model.weights[c][k] * row[k];
        values[c] = v;
    }
    return values;
}

int svm_predict(const SvmModel& model, std::span<const double> row) {
    return argmax_class(svm_decision_values(model, row));
}

} // namespace cfready
