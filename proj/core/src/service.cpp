#include "cfready/service.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "cfready/error.hpp"
#include "cfready/pipeline.hpp"

namespace cfready {

std::string_view status_color(int status_code) {
    static constexpr std::string_view kColors[kNumClasses] = {"red", "amber", "blue", "green"};
    label_name(status_code);  // validates the range
    return kColors[status_code];
}

nlohmann::ordered_json PredictionResponse::to_json() const {
    nlohmann::ordered_json j;
    j["handle"] = handle;
    j["status_code"] = status_code;
    j["label"] = label;
    if (confidence) j["confidence"] = *confidence;
    j["color"] = color;
    nlohmann::ordered_json summary;
    summary["best_rating"] = best_rating ? nlohmann::ordered_json(*best_rating) : nlohmann::ordered_json(nullptr);
    summary["total_problems_solved"] = total_problems_solved;
    summary["total_contests"] = total_contests;
    j["feature_summary"] = std::move(summary);
    j["model_version"] = model_version;
    return j;
}

PredictionResponse predict_features(const ModelBundle& bundle, const FeatureVector& raw, std::string handle) {
    const EncodedRow row = transform(raw, bundle.preprocessor);
    const Prediction p = predict(bundle.model, row);
    PredictionResponse r;
    r.handle = std::move(handle);
    r.status_code = p.cls;
    r.label = std::string(label_name(p.cls));
    if (p.vote_shares) r.confidence = (*p.vote_shares)[p.cls];
    r.color = std::string(status_color(p.cls));
    r.best_rating = raw.best_rating;
    r.total_problems_solved = raw.total_problems_solved;
    r.total_contests = raw.total_contests;
    r.model_version = bundle.metadata.version;
    return r;
}

PredictionService::PredictionService(std::shared_ptr<CodeforcesClient> client, ModelRegistry registry,
                                     std::shared_ptr<Clock> clock, double cache_seconds)
    : client_(std::move(client)),
      registry_(std::move(registry)),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      cache_seconds_(cache_seconds) {
    if (!client_) throw Error(Errc::invalid_argument, "prediction service needs a client");
}

std::shared_ptr<const ModelBundle> PredictionService::bundle() {
    const auto pointer = registry_.active_version();
    std::shared_ptr<const ModelBundle> current;
    {
        std::lock_guard lock(snapshot_mutex_);
        current = snapshot_;
    }
    if (!pointer || (current && current->metadata.version == *pointer)) return current;

    std::lock_guard reload(reload_mutex_);
    {
        std::lock_guard lock(snapshot_mutex_);
        if (snapshot_ && snapshot_->metadata.version == *pointer) return snapshot_;
        current = snapshot_;
    }
    if (failed_version_ == pointer) return current;
    try {
        auto fresh = std::make_shared<const ModelBundle>(registry_.load_active());
        std::lock_guard lock(snapshot_mutex_);
        snapshot_ = fresh;
        failed_version_.reset();
        return fresh;
    } catch (const Error&) {
        // Keep serving the previous bundle; retry once the pointer moves again.
        failed_version_ = pointer;
        return current;
    }
}

FeatureVector PredictionService::features_for(const std::string& handle) {
    const double now = clock_->now();
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(handle); it != cache_.end() && now - it->second.fetched_at < cache_seconds_)
            return it->second.features;
    }
    FeatureVector features = extract_feature_vector(fetch_activity(*client_, handle));
    std::lock_guard lock(cache_mutex_);
    std::erase_if(cache_, [&](const auto& kv) { return now - kv.second.fetched_at >= cache_seconds_; });
    cache_[handle] = {features, now};
    return features;
}

PredictionResponse PredictionService::predict(const std::string& handle) {
    if (handle.empty()) throw Error(Errc::invalid_argument, "empty handle");
    const auto snapshot = bundle();
    if (!snapshot) throw Error(Errc::no_active_model, "no active model version");
    return predict_features(*snapshot, features_for(handle), handle);
}

std::size_t PredictionService::cache_size() const {
    std::lock_guard lock(cache_mutex_);
    return cache_.size();
}

} // namespace cfready
