#include "cfready/synthetic.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "cfready/error.hpp"

namespace cfready {

namespace {

constexpr ArchetypeCenter kCenters[kNumClasses] = {
    // rating      solved        contests    accept      span         offset       start gap
    {1050, 110,    30, 0.45,     10, 0.45,   0.38, 0.08, 240, 0.35,   -100, 60,    150, 60},
    {1450, 130,    600, 0.50,    70, 0.45,   0.48, 0.08, 800, 0.35,   -200, 80,    350, 100},
    {1850, 110,    2600, 0.35,   200, 0.35,  0.55, 0.07, 1900, 0.30,  -300, 80,    600, 120},
    {2050, 110,    1150, 0.35,   175, 0.35,  0.58, 0.07, 1500, 0.30,  -250, 80,    650, 120},
};

struct WeightedTag {
    const char* name;
    double weight;
};

constexpr WeightedTag kTags[] = {
    {"greedy", 14},           {"dp", 11},
    {"implementation", 10},   {"math", 9},
    {"constructive algorithms", 7}, {"brute force", 6},
    {"data structures", 6},   {"sortings", 5},
    {"binary search", 5},     {"graphs", 4},
    {"number theory", 4},     {"strings", 3},
    {"dfs and similar", 3},   {"trees", 3},
    {"two pointers", 2.5},    {"bitmasks", 2},
    {"combinatorics", 2},     {"geometry", 1.2},
    {"shortest paths", 1.2},  {"dsu", 1},
    {"probabilities", 0.6},   {"games", 0.6},
    {"hashing", 0.6},         {"interactive", 0.5},
};

constexpr std::int64_t kEpochEnd = 1717200000;  // 2024-06-01 UTC

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    return rng();
}

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {
        for (std::size_t i = 0; i < std::size(kTags); ++i) weights_[i] = kTags[i].weight;
    }

    // Scales each tag weight by a log-normal personal preference.
    void personalize_tags(double sd) {
        if (sd <= 0.0) return;
        for (auto& w : weights_) w *= std::exp(sd * normal());
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
    }

    std::vector<std::string> tags() {
        const int k = 1 + (uniform() < 0.55) + (uniform() < 0.25);
        std::vector<std::string> out;
        while (static_cast<int>(out.size()) < k) {
            const std::string t = weighted_tag();
            if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
        }
        return out;
    }

    std::optional<int> problem_rating(double level) {
        if (uniform() < 0.05) return std::nullopt;
        const double r = std::round((level + 260.0 * normal()) / 100.0) * 100.0;
        return static_cast<int>(std::clamp(r, double(kMinProblemRating), double(kMaxProblemRating)));
    }

private:
    std::string weighted_tag() {
        double total = 0.0;
        for (double w : weights_) total += w;
        double x = uniform() * total;
        for (std::size_t i = 0; i < std::size(kTags); ++i) {
            if (x < weights_[i]) return kTags[i].name;
            x -= weights_[i];
        }
        return kTags[0].name;
    }

    std::mt19937_64 rng_;
    std::array<double, std::size(kTags)> weights_{};
};

std::string problem_key(std::size_t j) {
    return fmt::format("{}{}", 100 + j / 7, static_cast<char>('A' + j % 7));
}

SyntheticProfile center_profile(int cls) {
    const auto& c = kCenters[cls];
    SyntheticProfile p;
    p.label = cls;
    p.best_rating = static_cast<int>(c.best_rating);
    p.problems_solved = static_cast<std::int64_t>(c.problems_solved);
    p.contests = static_cast<std::int64_t>(c.contests);
    p.acceptance_ratio = c.acceptance_ratio;
    p.span_days = c.span_days;
    p.level_offset = c.level_offset;
    p.start_gap = c.start_gap;
    p.tag_preference_sd = kTagPreferenceSd;
    return p;
}

} // namespace

const ArchetypeCenter& class_center(int cls) {
    if (cls < 0 || cls >= kNumClasses) throw Error(Errc::unknown_label, fmt::format("class {} outside 0..3", cls));
    return kCenters[cls];
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (!(spec.noise >= 0.0)) throw Error(Errc::invalid_argument, "noise must be non-negative");
    SyntheticDataset out;
    Draw draw(mix_seed(spec.seed, 0x9e37, 0));
    std::uint64_t user = 0;
    for (int cls = 0; cls < kNumClasses; ++cls) {
        const auto& c = kCenters[cls];
        const double s = spec.noise;
        for (std::size_t i = 0; i < spec.sizes[cls]; ++i, ++user) {
            SyntheticProfile p;
            p.handle = fmt::format("synth_c{}_{:04d}", cls, i);
            p.label = cls;
            // Without noise every user of a class shares one activity history.
            p.activity_seed = mix_seed(spec.seed, 0xac71, s > 0.0 ? user : 1'000'000 + static_cast<std::uint64_t>(cls));
            p.best_rating = static_cast<int>(std::clamp(std::round(c.best_rating + s * c.best_rating_sd * draw.normal()), 400.0, 3800.0));
            p.problems_solved = std::max<std::int64_t>(1, std::llround(c.problems_solved * std::exp(s * c.problems_solved_log_sd * draw.normal())));
            p.contests = std::max<std::int64_t>(1, std::llround(c.contests * std::exp(s * c.contests_log_sd * draw.normal())));
            p.acceptance_ratio = std::clamp(c.acceptance_ratio + s * c.acceptance_ratio_sd * draw.normal(), 0.1, 0.95);
            p.span_days = std::max(7.0, c.span_days * std::exp(s * c.span_days_log_sd * draw.normal()));
            p.level_offset = c.level_offset + s * c.level_offset_sd * draw.normal();
            p.start_gap = std::max(0.0, c.start_gap + s * c.start_gap_sd * draw.normal());
            p.tag_preference_sd = s * kTagPreferenceSd;

            out.vectors.push_back(extract_feature_vector(synthesize_activity(p)));
            out.labels.push_back(cls);
            out.profiles.push_back(std::move(p));
        }
    }
    return out;
}

UserActivity synthesize_activity(const SyntheticProfile& profile) {
    Draw draw(profile.activity_seed);
    draw.personalize_tags(profile.tag_preference_sd);
    UserActivity a;
    a.handle = profile.handle;

    const auto span_s = static_cast<std::int64_t>(profile.span_days * kSecondsPerDay);
    const std::int64_t start = kEpochEnd - span_s;

    // Rating history: concave climb from best - start_gap to best.
    const auto n = static_cast<std::size_t>(std::max<std::int64_t>(profile.contests, 0));
    if (n > 0) {
        std::vector<double> path(n);
        const double first = profile.best_rating - profile.start_gap;
        for (std::size_t i = 0; i < n; ++i) {
            const double progress = n == 1 ? 1.0 : std::sqrt(static_cast<double>(i) / static_cast<double>(n - 1));
            path[i] = first + (profile.best_rating - first) * progress + (n == 1 ? 0.0 : 35.0 * draw.normal());
        }
        std::vector<int> ratings(n);
        std::transform(path.begin(), path.end(), ratings.begin(), [](double x) { return static_cast<int>(std::lround(x)); });
        const int shift = profile.best_rating - *std::max_element(ratings.begin(), ratings.end());
        for (auto& r : ratings) r += shift;

        const double gap = static_cast<double>(span_s) / static_cast<double>(n);
        std::int64_t prev_time = start - 1;
        for (std::size_t i = 0; i < n; ++i) {
            RatingChange rc;
            rc.contest_id = 1000 + static_cast<std::int64_t>(i) * 3;
            rc.contest_time = std::max(prev_time + 1, start + static_cast<std::int64_t>(gap * (static_cast<double>(i) + 0.1 + 0.8 * draw.uniform())));
            prev_time = rc.contest_time;
            rc.old_rating = i == 0 ? 0 : ratings[i - 1];
            rc.new_rating = ratings[i];
            const double log_rank = std::log(12000.0) - (ratings[i] - 1000.0) / 320.0 + 0.45 * draw.normal();
            rc.rank = std::max<std::int64_t>(1, std::llround(std::exp(log_rank)));
            a.rating_history.push_back(rc);
        }
    }

    // Submissions: one accept per solved problem, a few re-accepts, and
    // rejections sized by the acceptance ratio.
    struct ProblemDraw {
        std::string key;
        std::optional<int> rating;
        std::vector<std::string> tags;
    };
    const double level = profile.best_rating + profile.level_offset;
    const auto solved = static_cast<std::size_t>(std::max<std::int64_t>(profile.problems_solved, 0));
    std::vector<ProblemDraw> problems;
    problems.reserve(solved);
    for (std::size_t j = 0; j < solved; ++j) problems.push_back({problem_key(j), draw.problem_rating(level), draw.tags()});
    const std::size_t unsolved = std::max<std::size_t>(1, solved * 15 / 100);
    std::vector<ProblemDraw> attempted;
    for (std::size_t j = 0; j < unsolved; ++j)
        attempted.push_back({problem_key(solved + j), draw.problem_rating(level + 300.0), draw.tags()});

    struct Pending {
        std::int64_t time;
        const ProblemDraw* problem;
        Verdict verdict;
    };
    std::vector<Pending> pending;
    auto when = [&] { return draw.between(start, kEpochEnd); };
    for (const auto& p : problems) pending.push_back({when(), &p, Verdict::accepted});
    if (solved > 0) {
        const std::size_t reaccepts = solved * 3 / 100;
        for (std::size_t i = 0; i < reaccepts; ++i) pending.push_back({when(), &problems[draw.index(solved)], Verdict::accepted});
        const auto accepted = static_cast<double>(solved + reaccepts);
        const auto total = static_cast<std::size_t>(std::llround(accepted / profile.acceptance_ratio));
        const std::size_t rejected = total > solved + reaccepts ? total - solved - reaccepts : 0;
        for (std::size_t i = 0; i < rejected; ++i) {
            const ProblemDraw* target = draw.uniform() < 0.7 ? &problems[draw.index(solved)] : &attempted[draw.index(unsolved)];
            pending.push_back({when(), target, Verdict::rejected_other});
        }
    }
    std::stable_sort(pending.begin(), pending.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
    a.submissions.reserve(pending.size());
    std::int64_t id = 50'000'000;
    for (const auto& p : pending) {
        a.submissions.push_back(Submission{id++, p.time, p.problem->key, p.verdict, p.problem->rating, p.problem->tags});
    }
    return a;
}

SyntheticProfile archetype_profile(int case_number) {
    struct Case {
        int label;
        int best_rating;
        std::int64_t solved;
        std::int64_t contests;
    };
    static constexpr Case kCases[] = {{0, 1082, 28, 10}, {2, 1847, 2616, 200}, {3, 2046, 1149, 176}};
    if (case_number < 1 || case_number > 3)
        throw Error(Errc::invalid_argument, fmt::format("archetype {} outside 1..3", case_number));
    const auto& c = kCases[case_number - 1];
    SyntheticProfile p = center_profile(c.label);
    p.handle = fmt::format("EXAMPLE_USER_{}", case_number);
    p.activity_seed = 7000 + static_cast<std::uint64_t>(case_number);
    p.best_rating = c.best_rating;
    p.problems_solved = c.solved;
    p.contests = c.contests;
    return p;
}

} // namespace cfready
