#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfready/cf_types.hpp"

namespace cfready {

struct UserActivity {
    std::string handle;
    std::vector<RatingChange> rating_history;  // chronological
    std::vector<Submission> submissions;       // deduplicated
    std::unordered_map<std::string, Problem> problem_index;
};

// Solved-problem difficulty bands: <1200, 1200-1599, 1600-1999, 2000-2399, >=2400.
inline constexpr std::size_t kDifficultyBuckets = 5;
inline constexpr std::array<int, kDifficultyBuckets - 1> kDifficultyEdges{1200, 1600, 2000, 2400};
inline constexpr std::array<std::string_view, kDifficultyBuckets> kDifficultyNames{
    "lt1200", "1200_1599", "1600_1999", "2000_2399", "ge2400"};

std::size_t difficulty_bucket(int rating) noexcept;

inline constexpr std::string_view kOtherTag = "other";

// Top-K tag list plus the trailing "other" sentinel.
class TagVocabulary {
public:
    TagVocabulary() : TagVocabulary(std::vector<std::string>{}) {}
    explicit TagVocabulary(std::vector<std::string> top_tags);

    // Index of `tag`, or of "other" when not in the vocabulary.
    std::size_t index_of(std::string_view tag) const;
    std::size_t other_index() const noexcept { return entries_.size() - 1; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<std::string>& entries() const noexcept { return entries_; }

    bool operator==(const TagVocabulary&) const = default;

private:
    std::vector<std::string> entries_;
};

struct FeatureVector {
    // performance
    std::optional<double> best_rating;
    std::int64_t total_contests = 0;
    std::int64_t total_problems_solved = 0;
    std::int64_t total_submissions = 0;
    std::optional<double> avg_problem_rating;
    std::optional<double> acceptance_ratio;
    std::optional<double> best_rank;
    std::optional<double> avg_rank;
    // engagement
    double contests_per_month = 0.0;
    double submissions_per_day = 0.0;
    std::int64_t days_active = 0;
    // problem-solving skills
    std::array<std::int64_t, kDifficultyBuckets> solved_by_difficulty{};
    std::map<std::string, std::int64_t> solved_by_tag;
    // rating trend
    double rating_progression = 0.0;
    double improvement_rate = 0.0;

    bool operator==(const FeatureVector&) const = default;
};

struct PerformanceFeatures {
    std::optional<double> best_rating;
    std::int64_t total_contests = 0;
    std::int64_t total_problems_solved = 0;
    std::int64_t total_submissions = 0;
    std::optional<double> avg_problem_rating;
    std::optional<double> acceptance_ratio;
    std::optional<double> best_rank;
    std::optional<double> avg_rank;
};

struct EngagementFeatures {
    double contests_per_month = 0.0;
    double submissions_per_day = 0.0;
    std::int64_t days_active = 0;
};

struct SkillProfile {
    std::array<std::int64_t, kDifficultyBuckets> solved_by_difficulty{};
    std::map<std::string, std::int64_t> solved_by_tag;
};

struct RatingTrend {
    double rating_progression = 0.0;
    double improvement_rate = 0.0;
};

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDaysPerMonth = 30.44;

PerformanceFeatures performance_features(const UserActivity& activity);
EngagementFeatures engagement_features(const UserActivity& activity);

// With a vocabulary, tags outside it are summed into "other"; without one the
// raw per-tag counts are kept (the form stored in dataset files).
SkillProfile skill_profile(const UserActivity& activity, const TagVocabulary* vocab = nullptr);

// Progression is last minus first rating; the rate is the least-squares slope
// of new_rating over the 0-based contest index. Both zero below two contests.
RatingTrend rating_trend(const std::vector<RatingChange>& history);

FeatureVector extract_feature_vector(const UserActivity& activity,
                                     const TagVocabulary* vocab = nullptr);

// Training-set filter: users with fewer than 5 submissions and no rated
// contests carry no usable signal.
bool has_meaningful_activity(const FeatureVector& v) noexcept;

} // namespace cfready
