#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cfready/cf_client.hpp"
#include "cfready/clock.hpp"
#include "cfready/features.hpp"
#include "cfready/registry.hpp"

namespace cfready {

// red, amber, blue, green for classes 0..3.
std::string_view status_color(int status_code);

struct PredictionResponse {
    std::string handle;
    int status_code = 0;
    std::string label;
    std::optional<double> confidence;  // forest bundles only
    std::string color;
    std::optional<double> best_rating;
    std::int64_t total_problems_solved = 0;
    std::int64_t total_contests = 0;
    std::string model_version;

    nlohmann::ordered_json to_json() const;
};

PredictionResponse predict_features(const ModelBundle& bundle, const FeatureVector& raw, std::string handle);

inline constexpr double kUpstreamCacheSeconds = 600.0;

// Serves predictions from the registry's active bundle. The active pointer is
// re-read on every request; a changed pointer loads the new bundle and swaps
// it in, and a bundle that fails to load leaves the previous one serving.
// Each request works on one immutable bundle snapshot.
class PredictionService {
public:
    PredictionService(std::shared_ptr<CodeforcesClient> client, ModelRegistry registry,
                      std::shared_ptr<Clock> clock = nullptr, double cache_seconds = kUpstreamCacheSeconds);

    // Throws Error(no_active_model | invalid_argument) or ClientError.
    PredictionResponse predict(const std::string& handle);

    // Current snapshot after checking the pointer; null when nothing is active.
    std::shared_ptr<const ModelBundle> bundle();

    std::size_t cache_size() const;

private:
    FeatureVector features_for(const std::string& handle);

    std::shared_ptr<CodeforcesClient> client_;
    ModelRegistry registry_;
    std::shared_ptr<Clock> clock_;
    double cache_seconds_;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const ModelBundle> snapshot_;
    std::mutex reload_mutex_;
    std::optional<std::string> failed_version_;  // last pointer value that would not load

    struct CacheEntry {
        FeatureVector features;
        double fetched_at = 0.0;
    };
    mutable std::mutex cache_mutex_;
    std::unordered_map<std::string, CacheEntry> cache_;
};

} // namespace cfready
