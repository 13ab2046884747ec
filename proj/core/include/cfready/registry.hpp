#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfready/models.hpp"
#include "cfready/preprocessing.hpp"

namespace cfready {

struct ModelMetadata {
    std::string version;     // "v<N>", assigned by save_version
    std::string created_at;  // ISO-8601 UTC
    std::vector<std::string> feature_schema;
    std::string schema_hash;
    ModelType model_type = ModelType::forest;
    nlohmann::ordered_json hyperparams = nlohmann::ordered_json::object();
    std::size_t training_rows = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::uint64_t seed = 0;

    nlohmann::ordered_json to_json() const;
    // Throws Error(corrupt_bundle).
    static ModelMetadata from_json(const nlohmann::json& j);
};

struct ModelBundle {
    Model model;
    PreprocessorParams preprocessor;
    ModelMetadata metadata;

    // Throws Error(inconsistent_bundle) unless model, preprocessor and
    // metadata agree on the feature schema and model type.
    void validate() const;
};

std::string utc_timestamp_now();

inline constexpr const char* kDefaultModelRoot = "./models";

// Directory layout: <root>/v<N>/{model.json, preprocessor.json, metadata.json}
// plus <root>/ACTIVE holding the served version. Version directories are
// immutable once renamed into place; the pointer is swapped by rename.
// Readers take no lock; writers serialize on an flock of <root>/.lock.
class ModelRegistry {
public:
    explicit ModelRegistry(std::filesystem::path root);

    // MODEL_ROOT or ./models.
    static std::filesystem::path root_from_env();

    const std::filesystem::path& root() const noexcept { return root_; }

    // Writes the next version; never activates. Throws
    // Error(inconsistent_bundle | storage_failure).
    std::string save_version(const ModelBundle& bundle);

    // Throws Error(unknown_version | corrupt_bundle); the pointer is untouched on failure.
    void set_active(std::string_view version);

    std::optional<std::string> active_version() const;

    // Throws Error(no_active_model | corrupt_bundle).
    ModelBundle load_active() const;

    // Throws Error(unknown_version | corrupt_bundle).
    ModelBundle load_version(std::string_view version) const;

    // Readable versions in ascending order; unreadable directories are skipped.
    std::vector<ModelMetadata> list_versions() const;

    // Activates the highest loadable version below the active one.
    // Throws Error(nothing_to_roll_back).
    std::string rollback();

    // Test seam: called at named points of save/activate; throwing from it
    // simulates a crash at that point. Stages: "save:written",
    // "activate:written".
    using FaultHook = std::function<void(std::string_view stage)>;
    void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

private:
    void fault(std::string_view stage) const {
        if (fault_hook_) fault_hook_(stage);
    }
    void activate_locked(std::string_view version);
    std::vector<int> version_numbers() const;

    std::filesystem::path root_;
    FaultHook fault_hook_;
};

// Parses "v<N>" with N >= 1.
std::optional<int> parse_version(std::string_view version);

} // namespace cfready
