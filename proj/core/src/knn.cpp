#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "cfready/error.hpp"
#include "cfready/models.hpp"

namespace cfready {

KnnModel train_knn(const RowMatrix& rows, std::span<const int> labels, const Hyperparams& hp) {
    hp.validate();
    check_labels(labels, rows.rows());
    if (rows.rows() < hp.knn.k)
        throw Error(Errc::insufficient_data,
                    fmt::format("k = {} exceeds the {} stored rows", hp.knn.k, rows.rows()));
    return KnnModel{rows, std::vector<int>(labels.begin(), labels.end()), hp.knn.k, {}};
}

int knn_predict(const KnnModel& model, std::span<const double> row) {
    if (row.size() != model.rows.cols())
        throw Error(Errc::schema_mismatch,
                    fmt::format("row has {} values, knn expects {}", row.size(), model.rows.cols()));
    const std::size_t n = model.rows.rows();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = model.rows.row(i);
        double d = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) d += (r[k] - row[k]) * (r[k] - row[k]);
        dist[i] = {d, i};  // equal distances fall back to training order
    }
    const std::size_t k = std::min(model.k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    std::array<std::size_t, kNumClasses> votes{};
    for (std::size_t i = 0; i < k; ++i) ++votes[model.labels[dist[i].second]];
    return argmax_class(votes);
}

} // namespace cfready
