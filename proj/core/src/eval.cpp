#include "cfready/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/core.h>

#include "cfready/error.hpp"

namespace cfready {

void LabeledDataset::validate() const {
    check_labels(labels, rows.rows());
    if (!handles.empty() && handles.size() != labels.size())
        throw Error(Errc::length_mismatch, fmt::format("{} handles for {} labels", handles.size(), labels.size()));
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.rows = rows.select(indices);
    for (auto i : indices) {
        out.labels.push_back(labels[i]);
        if (!handles.empty()) out.handles.push_back(handles[i]);
    }
    return out;
}

ClassSizes class_sizes(std::span<const int> labels) {
    ClassSizes sizes{};
    for (int l : labels) {
        if (l < 0 || l >= kNumClasses) throw Error(Errc::unknown_label, fmt::format("class {} outside 0..3", l));
        ++sizes[l];
    }
    return sizes;
}

ClassSizes stratified_test_counts(const ClassSizes& sizes, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(Errc::invalid_argument, fmt::format("test fraction {} outside (0, 1)", test_fraction));

    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    // products like 100 * 0.29 land a hair below the integer they stand for
    constexpr double eps = 1e-9;
    const auto target = static_cast<std::size_t>(std::floor(static_cast<double>(total) * test_fraction + 0.5 + eps));

    ClassSizes counts{};
    std::array<double, kNumClasses> remainder{};
    std::size_t assigned = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        const double exact = static_cast<double>(sizes[c]) * test_fraction;
        const double whole = std::floor(exact + eps);
        counts[c] = static_cast<std::size_t>(whole);
        remainder[c] = std::max(0.0, exact - whole);
        if (remainder[c] < eps) remainder[c] = 0.0;
        assigned += counts[c];
    }
    std::array<int, kNumClasses> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b] + eps; });
    for (std::size_t i = 0; assigned < target && i < order.size(); ++i) {
        if (remainder[order[i]] <= 0.0) continue;
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
    const auto sizes = class_sizes(labels);
    const auto test_counts = stratified_test_counts(sizes, test_fraction);

    std::array<std::vector<std::size_t>, kNumClasses> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    SplitIndices split;
    for (int c = 0; c < kNumClasses; ++c) {
        if (sizes[c] == 0) continue;
        if (test_counts[c] >= sizes[c])
            throw Error(Errc::degenerate_class,
                        fmt::format("class {} has {} member(s), none left for training", c, sizes[c]));
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c), 0x57u};
        std::mt19937_64 rng(seq);
        auto& m = members[c];
        std::shuffle(m.begin(), m.end(), rng);
        const auto cut = m.begin() + static_cast<std::ptrdiff_t>(test_counts[c]);
        split.test.insert(split.test.end(), m.begin(), cut);
        split.train.insert(split.train.end(), cut, m.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::int64_t ConfusionMatrix::total() const noexcept {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (auto x : row) t += x;
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw Error(Errc::length_mismatch, fmt::format("{} truths vs {} predictions", y_true.size(), y_pred.size()));
    if (y_true.empty()) throw Error(Errc::insufficient_data, "confusion matrix of zero samples");
    check_labels(y_true, y_true.size());
    check_labels(y_pred, y_pred.size());
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[y_true[i]][y_pred[i]];
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total < 1) throw Error(Errc::insufficient_data, "metrics of an empty confusion matrix");

    Metrics m;
    std::int64_t trace = 0;
    int present = 0;
    for (int i = 0; i < kNumClasses; ++i) {
        std::int64_t row = 0;
        std::int64_t col = 0;
        for (int j = 0; j < kNumClasses; ++j) {
            row += cm.counts[i][j];
            col += cm.counts[j][i];
        }
        const auto tp = cm.counts[i][i];
        trace += tp;
        auto& pc = m.per_class[i];
        pc.support = row;
        pc.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        pc.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        pc.f1 = pc.precision + pc.recall > 0.0 ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall) : 0.0;
        if (row > 0) {
            ++present;
            m.macro_precision += pc.precision;
            m.macro_recall += pc.recall;
            m.macro_f1 += pc.f1;
        }
    }
    m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    m.macro_precision /= present;
    m.macro_recall /= present;
    m.macro_f1 /= present;
    return m;
}

EvaluationReport evaluate_model(const Model& model, std::string name, const LabeledDataset& test) {
    test.validate();
    std::vector<int> predicted;
    predicted.reserve(test.labels.size());
    for (std::size_t i = 0; i < test.rows.rows(); ++i) predicted.push_back(predict(model, test.rows.row(i)).cls);

    EvaluationReport r;
    r.model = std::move(name);
    r.test_rows = test.labels.size();
    r.confusion = confusion_matrix(test.labels, predicted);
    r.metrics = metrics(r.confusion);
    return r;
}

std::vector<EvaluationReport> rank_models(std::vector<EvaluationReport> reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        if (a.metrics.accuracy != b.metrics.accuracy) return a.metrics.accuracy > b.metrics.accuracy;
        if (a.metrics.macro_f1 != b.metrics.macro_f1) return a.metrics.macro_f1 > b.metrics.macro_f1;
        return a.model < b.model;
    });
    return reports;
}

nlohmann::ordered_json EvaluationReport::to_json() const {
    nlohmann::ordered_json j;
    j["model"] = model;
    j["seed"] = seed;
    j["test_fraction"] = test_fraction;
    j["train_rows"] = train_rows;
    j["test_rows"] = test_rows;
    j["accuracy"] = metrics.accuracy;
    j["macro_precision"] = metrics.macro_precision;
    j["macro_recall"] = metrics.macro_recall;
    j["macro_f1"] = metrics.macro_f1;
    auto per_class = nlohmann::ordered_json::array();
    for (int c = 0; c < kNumClasses; ++c) {
        const auto& pc = metrics.per_class[c];
        nlohmann::ordered_json e;
        e["class"] = c;
        e["label"] = label_name(c);
        e["precision"] = pc.precision;
        e["recall"] = pc.recall;
        e["f1"] = pc.f1;
        e["support"] = pc.support;
        per_class.push_back(std::move(e));
    }
    j["per_class"] = std::move(per_class);
    j["confusion_matrix"] = confusion.counts;
    return j;
}

std::string comparison_table(std::span<const EvaluationReport> ranked) {
    std::string out = fmt::format("{:<4} {:<8} {:>9} {:>9} {:>9} {:>9}\n", "rank", "model", "precision",
                                  "recall", "f1", "accuracy");
    int rank = 1;
    for (const auto& r : ranked) {
        out += fmt::format("{:<4} {:<8} {:>9.3f} {:>9.3f} {:>9.3f} {:>8.1f}%\n", rank++, r.model,
                           r.metrics.macro_precision, r.metrics.macro_recall, r.metrics.macro_f1,
                           100.0 * r.metrics.accuracy);
    }
    return out;
}

std::string comparison_csv(std::span<const EvaluationReport> ranked) {
    std::string out = "rank,model,seed,test_fraction,train_rows,test_rows,accuracy,macro_precision,macro_recall,macro_f1\n";
    int rank = 1;
    for (const auto& r : ranked) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", rank++, r.model, r.seed, r.test_fraction, r.train_rows,
                           r.test_rows, r.metrics.accuracy, r.metrics.macro_precision, r.metrics.macro_recall,
                           r.metrics.macro_f1);
    }
    return out;
}

} // namespace cfready
