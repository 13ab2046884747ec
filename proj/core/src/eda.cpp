#include "cfready/eda.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "cfready/csv.hpp"
#include "cfready/error.hpp"

namespace cfready {

namespace {

std::string num(double x) {
    return fmt::format("{}", x);
}

std::vector<std::string> numeric_columns() {
    std::vector<std::string> names;
    for (const auto& c : feature_layout(TagVocabulary{})) {
        if (!c.name.starts_with("tag.")) names.push_back(c.name);
    }
    return names;
}

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::length_mismatch, "pearson inputs differ in length");
    const auto n = static_cast<double>(x.size());
    if (x.empty()) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error(Errc::insufficient_data, "quantile of empty data");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EdaSummary eda_summary(std::span<const FeatureVector> vectors, std::span<const int> labels,
                       const std::vector<std::string>& scatter_features) {
    if (vectors.size() < 2) throw Error(Errc::insufficient_data, "EDA needs at least 2 vectors");
    if (labels.size() != vectors.size()) throw Error(Errc::length_mismatch, "labels must parallel vectors");
    for (int l : labels) label_name(l);

    EdaSummary s;
    s.samples = vectors.size();
    const TagVocabulary no_vocab;

    // Rating histogram
    std::map<int, std::int64_t> bins;
    for (const auto& v : vectors) {
        if (!v.best_rating) continue;
        const int lower = static_cast<int>(std::floor(*v.best_rating / kHistogramBinWidth)) * kHistogramBinWidth;
        ++bins[lower];
    }
    if (!bins.empty()) {
        for (int b = bins.begin()->first; b <= bins.rbegin()->first; b += kHistogramBinWidth) {
            const auto it = bins.find(b);
            s.rating_histogram.push_back({b, it == bins.end() ? 0 : it->second});
        }
    }

    for (const auto& v : vectors) s.contests_vs_solved.emplace_back(v.total_contests, v.total_problems_solved);

    // Correlations over pairwise-complete rows
    s.correlation_columns = numeric_columns();
    const std::size_t m = s.correlation_columns.size();
    std::vector<std::vector<std::optional<double>>> cols(m);
    for (std::size_t c = 0; c < m; ++c) {
        for (const auto& v : vectors) cols[c].push_back(raw_feature(v, s.correlation_columns[c], no_vocab));
    }
    s.correlation.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            std::vector<double> x, y;
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                if (cols[a][i] && cols[b][i]) {
                    x.push_back(*cols[a][i]);
                    y.push_back(*cols[b][i]);
                }
            }
            s.correlation[a][b] = s.correlation[b][a] = pearson(x, y);
        }
    }

    // Tag totals
    std::map<std::string, std::int64_t> tags;
    for (const auto& v : vectors) {
        for (const auto& [tag, n] : v.solved_by_tag) tags[tag] += n;
    }
    s.top_tags.assign(tags.begin(), tags.end());
    std::stable_sort(s.top_tags.begin(), s.top_tags.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (s.top_tags.size() > kTagVocabularySize) s.top_tags.resize(kTagVocabularySize);

    // Per-class rating spread
    std::array<std::vector<double>, kNumClasses> ratings;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].best_rating) ratings[labels[i]].push_back(*vectors[i].best_rating);
    }
    for (int c = 0; c < kNumClasses; ++c) {
        auto& r = ratings[c];
        if (r.empty()) continue;
        std::sort(r.begin(), r.end());
        s.rating_by_class[c] = BoxStats{r.size(), r.front(), quantile_sorted(r, 0.25), quantile_sorted(r, 0.5),
                                        quantile_sorted(r, 0.75), r.back()};
    }

    // Pairwise scatter data
    for (std::size_t a = 0; a < scatter_features.size(); ++a) {
        for (std::size_t b = a + 1; b < scatter_features.size(); ++b) {
            ScatterSeries series{scatter_features[a], scatter_features[b], {}, {}};
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                const auto x = raw_feature(vectors[i], series.x, no_vocab);
                const auto y = raw_feature(vectors[i], series.y, no_vocab);
                if (x && y) {
                    series.points.emplace_back(*x, *y);
                    series.labels.push_back(labels[i]);
                }
            }
            s.scatter.push_back(std::move(series));
        }
    }
    return s;
}

nlohmann::ordered_json EdaSummary::to_json() const {
    nlohmann::ordered_json j;
    j["samples"] = samples;
    auto& hist = j["rating_histogram"] = nlohmann::ordered_json::array();
    for (const auto& b : rating_histogram) {
        hist.push_back({{"lower", b.lower}, {"upper", b.lower + kHistogramBinWidth}, {"count", b.count}});
    }
    auto& cvs = j["contests_vs_solved"] = nlohmann::ordered_json::array();
    for (const auto& [c, p] : contests_vs_solved) cvs.push_back({{"total_contests", c}, {"total_problems_solved", p}});
    j["correlation"] = {{"columns", correlation_columns}, {"matrix", correlation}};
    auto& tags = j["top_tags"] = nlohmann::ordered_json::array();
    for (const auto& [t, n] : top_tags) tags.push_back({{"tag", t}, {"count", n}});
    auto& box = j["rating_by_class"] = nlohmann::ordered_json::array();
    for (int c = 0; c < kNumClasses; ++c) {
        nlohmann::ordered_json e{{"class", c}, {"label", label_name(c)}};
        if (const auto& b = rating_by_class[c]) {
            e["n"] = b->n;
            e["min"] = b->min;
            e["q1"] = b->q1;
            e["median"] = b->median;
            e["q3"] = b->q3;
            e["max"] = b->max;
        } else {
            e["n"] = 0;
        }
        box.push_back(std::move(e));
    }
    auto& sc = j["scatter"] = nlohmann::ordered_json::array();
    for (const auto& series : scatter) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < series.points.size(); ++i) {
            pts.push_back({series.points[i].first, series.points[i].second, series.labels[i]});
        }
        sc.push_back({{"x", series.x}, {"y", series.y}, {"points", std::move(pts)}});
    }
    return j;
}

std::map<std::string, std::string> EdaSummary::csv_tables() const {
    std::map<std::string, std::string> out;

    std::string& hist = out["rating_histogram.csv"];
    hist = csv::format_row({"lower", "upper", "count"});
    for (const auto& b : rating_histogram)
        hist += csv::format_row({std::to_string(b.lower), std::to_string(b.lower + kHistogramBinWidth), std::to_string(b.count)});

    std::string& cvs = out["contests_vs_solved.csv"];
    cvs = csv::format_row({"total_contests", "total_problems_solved"});
    for (const auto& [c, p] : contests_vs_solved) cvs += csv::format_row({std::to_string(c), std::to_string(p)});

    std::string& corr = out["correlation.csv"];
    csv::Row header{"feature"};
    header.insert(header.end(), correlation_columns.begin(), correlation_columns.end());
    corr = csv::format_row(header);
    for (std::size_t a = 0; a < correlation_columns.size(); ++a) {
        csv::Row row{correlation_columns[a]};
        for (double r : correlation[a]) row.push_back(num(r));
        corr += csv::format_row(row);
    }

    std::string& tags = out["top_tags.csv"];
    tags = csv::format_row({"tag", "count"});
    for (const auto& [t, n] : top_tags) tags += csv::format_row({t, std::to_string(n)});

    std::string& box = out["rating_by_class.csv"];
    box = csv::format_row({"class", "label", "n", "min", "q1", "median", "q3", "max"});
    for (int c = 0; c < kNumClasses; ++c) {
        if (const auto& b = rating_by_class[c]) {
            box += csv::format_row({std::to_string(c), std::string(label_name(c)), std::to_string(b->n), num(b->min),
                                    num(b->q1), num(b->median), num(b->q3), num(b->max)});
        }
    }

    std::string& sc = out["scatter.csv"];
    sc = csv::format_row({"x_feature", "y_feature", "x", "y", "class"});
    for (const auto& series : scatter) {
        for (std::size_t i = 0; i < series.points.size(); ++i) {
            sc += csv::format_row({series.x, series.y, num(series.points[i].first), num(series.points[i].second),
                                   std::to_string(series.labels[i])});
        }
    }
    return out;
}

} // namespace cfready
