#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfready/eval.hpp"
#include "cfready/features.hpp"

namespace cfready {

// Per-class generating distribution. Ratings, acceptance, level offset and
// start gap are Gaussian; counts and span are log-normal around the center.
struct ArchetypeCenter {
    double best_rating;
    double best_rating_sd;
    double problems_solved;
    double problems_solved_log_sd;
    double contests;
    double contests_log_sd;
    double acceptance_ratio;
    double acceptance_ratio_sd;
    double span_days;
    double span_days_log_sd;
    double level_offset;     // mean solved-problem rating minus best rating
    double level_offset_sd;
    double start_gap;        // best rating minus first contest rating
    double start_gap_sd;
};

const ArchetypeCenter& class_center(int cls);

inline constexpr ClassSizes kDefaultClassSizes{95, 331, 141, 58};

struct SyntheticSpec {
    ClassSizes sizes = kDefaultClassSizes;
    double noise = 1.0;  // multiplies every spread; 0 puts users on their class center
    std::uint64_t seed = 1;
};

// Parameters of one synthetic user; synthesize_activity() expands it.
struct SyntheticProfile {
    std::string handle;
    int label = 0;
    std::uint64_t activity_seed = 0;
    int best_rating = 0;
    std::int64_t problems_solved = 0;
    std::int64_t contests = 0;
    double acceptance_ratio = 0.5;
    double span_days = 365.0;
    double level_offset = 0.0;
    double start_gap = 0.0;
    // Log-normal spread of the user's personal tag preferences around the
    // global tag frequencies; 0 means every user draws tags alike.
    double tag_preference_sd = 0.0;
};

inline constexpr double kTagPreferenceSd = 1.0;

struct SyntheticDataset {
    std::vector<SyntheticProfile> profiles;
    std::vector<FeatureVector> vectors;  // raw features, parallel to profiles
    std::vector<int> labels;
};

// Deterministic per spec.seed. Users are grouped by class.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Raw upstream-shaped activity with exactly the profile's best rating,
// contest count and distinct solved problems. Deterministic per profile.
UserActivity synthesize_activity(const SyntheticProfile& profile);

// Profiles for the three archetype users (1..3), handles
// EXAMPLE_USER_1..3, placed in classes 0, 2 and 3.
SyntheticProfile archetype_profile(int case_number);

} // namespace cfready
