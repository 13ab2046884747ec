#include "cfready/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "cfready/error.hpp"

namespace cfready {

std::size_t difficulty_bucket(int rating) noexcept {
    std::size_t b = 0;
    while (b < kDifficultyEdges.size() && rating >= kDifficultyEdges[b]) ++b;
    return b;
}

TagVocabulary::TagVocabulary(std::vector<std::string> top_tags) : entries_(std::move(top_tags)) {
    std::set<std::string_view> seen;
    for (const auto& t : entries_) {
        if (t == kOtherTag) throw Error(Errc::invalid_argument, "'other' is reserved in a tag vocabulary");
        if (!seen.insert(t).second) throw Error(Errc::invalid_argument, "duplicate tag in vocabulary: " + t);
    }
    entries_.emplace_back(kOtherTag);
}

std::size_t TagVocabulary::index_of(std::string_view tag) const {
    const auto n = entries_.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
        if (entries_[i] == tag) return i;
    return n;
}

namespace {

struct SolvedProblem {
    std::optional<int> rating;
    const std::vector<std::string>* tags = nullptr;
};

// Distinct accepted problems, with rating and tags falling back to the problemset index.
std::unordered_map<std::string, SolvedProblem> solved_problems(const UserActivity& activity) {
    std::unordered_map<std::string, SolvedProblem> solved;
    for (const auto& s : activity.submissions) {
        if (s.verdict != Verdict::accepted) continue;
        auto [it, inserted] = solved.try_emplace(s.problem_key);
        if (!inserted) continue;
        auto& sp = it->second;
        sp.rating = s.problem_rating;
        sp.tags = &s.tags;
        if (auto p = activity.problem_index.find(s.problem_key); p != activity.problem_index.end()) {
            if (!sp.rating) sp.rating = p->second.rating;
            if (sp.tags->empty()) sp.tags = &p->second.tags;
        }
    }
    return solved;
}

} // namespace

PerformanceFeatures performance_features(const UserActivity& activity) {
    PerformanceFeatures f;
    const auto& history = activity.rating_history;
    f.total_contests = static_cast<std::int64_t>(history.size());
    if (!history.empty()) {
        int best = std::numeric_limits<int>::min();
        std::int64_t best_rank = std::numeric_limits<std::int64_t>::max();
        double rank_sum = 0.0;
        for (const auto& rc : history) {
            best = std::max(best, rc.new_rating);
            best_rank = std::min(best_rank, rc.rank);
            rank_sum += static_cast<double>(rc.rank);
        }
        f.best_rating = best;
        f.best_rank = static_cast<double>(best_rank);
        f.avg_rank = rank_sum / static_cast<double>(history.size());
    }

    const auto solved = solved_problems(activity);
    f.total_problems_solved = static_cast<std::int64_t>(solved.size());
    double rating_sum = 0.0;
    std::size_t rated = 0;
    for (const auto& [key, sp] : solved) {
        if (!sp.rating) continue;
        rating_sum += *sp.rating;
        ++rated;
    }
    if (rated > 0) f.avg_problem_rating = rating_sum / static_cast<double>(rated);

    f.total_submissions = static_cast<std::int64_t>(activity.submissions.size());
    if (f.total_submissions > 0) {
        const auto accepted = std::count_if(activity.submissions.begin(), activity.submissions.end(),
                                            [](const auto& s) { return s.verdict == Verdict::accepted; });
        f.acceptance_ratio = static_cast<double>(accepted) / static_cast<double>(f.total_submissions);
    }
    return f;
}

EngagementFeatures engagement_features(const UserActivity& activity) {
    EngagementFeatures f;
    const auto& subs = activity.submissions;
    if (!subs.empty()) {
        std::unordered_set<std::int64_t> days;
        std::int64_t first = subs.front().submit_time;
        std::int64_t last = first;
        for (const auto& s : subs) {
            first = std::min(first, s.submit_time);
            last = std::max(last, s.submit_time);
            // floor division so pre-epoch timestamps still bucket by UTC day
            auto day = s.submit_time / 86400;
            if (s.submit_time % 86400 < 0) --day;
            days.insert(day);
        }
        f.days_active = static_cast<std::int64_t>(days.size());
        const double span_days = std::ceil(static_cast<double>(last - first) / kSecondsPerDay);
        f.submissions_per_day = static_cast<double>(subs.size()) / std::max(1.0, span_days);
    }

    const auto& history = activity.rating_history;
    if (!history.empty()) {
        auto [lo, hi] = std::minmax_element(history.begin(), history.end(), [](const auto& a, const auto& b) {
            return a.contest_time < b.contest_time;
        });
        const double months =
            static_cast<double>(hi->contest_time - lo->contest_time) / (kDaysPerMonth * kSecondsPerDay);
        f.contests_per_month = static_cast<double>(history.size()) / std::max(1.0, months);
    }
    return f;
}

SkillProfile skill_profile(const UserActivity& activity, const TagVocabulary* vocab) {
    SkillProfile f;
    if (vocab) {
        for (const auto& t : vocab->entries()) f.solved_by_tag[t] = 0;
    }
    for (const auto& [key, sp] : solved_problems(activity)) {
        if (sp.rating) ++f.solved_by_difficulty[difficulty_bucket(*sp.rating)];
        for (const auto& tag : *sp.tags) {
            if (vocab)
                ++f.solved_by_tag[vocab->entries()[vocab->index_of(tag)]];
            else
                ++f.solved_by_tag[tag];
        }
    }
    return f;
}

RatingTrend rating_trend(const std::vector<RatingChange>& history) {
    RatingTrend t;
    const std::size_t n = history.size();
    if (n < 2) return t;
    t.rating_progression = static_cast<double>(history.back().new_rating - history.front().new_rating);

    const double mean_x = static_cast<double>(n - 1) / 2.0;
    double mean_y = 0.0;
    for (const auto& rc : history) mean_y += rc.new_rating;
    mean_y /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - mean_x;
        sxy += dx * (history[i].new_rating - mean_y);
        sxx += dx * dx;
    }
    t.improvement_rate = sxy / sxx;
    return t;
}

FeatureVector extract_feature_vector(const UserActivity& activity, const TagVocabulary* vocab) {
    const auto perf = performance_features(activity);
    const auto eng = engagement_features(activity);
    auto skill = skill_profile(activity, vocab);
    const auto trend = rating_trend(activity.rating_history);

    FeatureVector v;
    v.best_rating = perf.best_rating;
    v.total_contests = perf.total_contests;
    v.total_problems_solved = perf.total_problems_solved;
    v.total_submissions = perf.total_submissions;
    v.avg_problem_rating = perf.avg_problem_rating;
    v.acceptance_ratio = perf.acceptance_ratio;
    v.best_rank = perf.best_rank;
    v.avg_rank = perf.avg_rank;
    v.contests_per_month = eng.contests_per_month;
    v.submissions_per_day = eng.submissions_per_day;
    v.days_active = eng.days_active;
    v.solved_by_difficulty = skill.solved_by_difficulty;
    v.solved_by_tag = std::move(skill.solved_by_tag);
    v.rating_progression = trend.rating_progression;
    v.improvement_rate = trend.improvement_rate;
    return v;
}

bool has_meaningful_activity(const FeatureVector& v) noexcept {
    return !(v.total_submissions < 5 && v.total_contests == 0);
}

} // namespace cfready
