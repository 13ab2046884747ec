#include "cfready/registry.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <ctime>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fmt/core.h>

#include "cfready/dataset_io.hpp"
#include "cfready/error.hpp"

namespace cfready {

namespace fs = std::filesystem;

namespace {

constexpr const char* kModelFile = "model.json";
constexpr const char* kPreprocessorFile = "preprocessor.json";
constexpr const char* kMetadataFile = "metadata.json";
constexpr const char* kActiveFile = "ACTIVE";

class WriterLock {
public:
    explicit WriterLock(const fs::path& root) {
        const auto path = (root / ".lock").string();
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error(Errc::storage_failure, fmt::format("cannot open lock file '{}'", path));
        while (::flock(fd_, LOCK_EX) != 0) {
            if (errno != EINTR) {
                ::close(fd_);
                throw Error(Errc::storage_failure, "cannot lock registry");
            }
        }
    }
    ~WriterLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

private:
    int fd_ = -1;
};

void sync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

void write_durable(const fs::path& path, std::string_view content) {
    try {
        write_text_file(path, content);
    } catch (const Error& e) {
        throw Error(Errc::storage_failure, e.what());
    }
}

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    const auto b = s.find_first_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b);
}

} // namespace

std::optional<int> parse_version(std::string_view version) {
    if (version.size() < 2 || version[0] != 'v') return std::nullopt;
    int n = 0;
    const auto* end = version.data() + version.size();
    const auto [ptr, ec] = std::from_chars(version.data() + 1, end, n);
    if (ec != std::errc() || ptr != end || n < 1 || version[1] == '0') return std::nullopt;
    return n;
}

std::string utc_timestamp_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json ModelMetadata::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version;
    j["created_at"] = created_at;
    j["model_type"] = to_string(model_type);
    j["schema_hash"] = schema_hash;
    j["feature_schema"] = feature_schema;
    j["hyperparams"] = hyperparams;
    j["training_rows"] = training_rows;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["seed"] = seed;
    return j;
}

ModelMetadata ModelMetadata::from_json(const nlohmann::json& j) {
    try {
        ModelMetadata m;
        m.version = j.at("version").get<std::string>();
        m.created_at = j.at("created_at").get<std::string>();
        m.model_type = model_type_from_string(j.at("model_type").get<std::string>());
        m.schema_hash = j.at("schema_hash").get<std::string>();
        m.feature_schema = j.at("feature_schema").get<std::vector<std::string>>();
        m.hyperparams = j.at("hyperparams");
        m.training_rows = j.at("training_rows").get<std::size_t>();
        m.accuracy = j.at("accuracy").get<double>();
        m.macro_f1 = j.at("macro_f1").get<double>();
        m.seed = j.at("seed").get<std::uint64_t>();
        if (!(m.accuracy >= 0.0 && m.accuracy <= 1.0) || !(m.macro_f1 >= 0.0 && m.macro_f1 <= 1.0))
            throw Error(Errc::corrupt_bundle, "metadata metrics outside [0,1]");
        return m;
    } catch (const Error& e) {
        throw Error(Errc::corrupt_bundle, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_bundle, fmt::format("bad metadata: {}", e.what()));
    }
}

void ModelBundle::validate() const {
    auto fail = [](const std::string& why) { throw Error(Errc::inconsistent_bundle, why); };
    const std::string hash = preprocessor.schema_hash();
    if (model_schema_hash(model) != hash) fail("model and preprocessor schema hashes differ");
    if (metadata.schema_hash != hash) fail("metadata and preprocessor schema hashes differ");
    if (metadata.feature_schema != preprocessor.schema) fail("metadata feature schema differs from preprocessor");
    if (model_n_features(model) != preprocessor.schema.size()) fail("model width differs from the feature schema");
    if (metadata.model_type != model_type(model)) fail("metadata model type differs from the model");
}

ModelRegistry::ModelRegistry(fs::path root) : root_(std::move(root)) {}

fs::path ModelRegistry::root_from_env() {
    if (const char* v = std::getenv("MODEL_ROOT"); v && *v) return v;
    return kDefaultModelRoot;
}

std::vector<int> ModelRegistry::version_numbers() const {
    std::vector<int> out;
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) return out;
    for (const auto& entry : fs::directory_iterator(root_, ec)) {
        if (!entry.is_directory(ec)) continue;
        if (auto n = parse_version(entry.path().filename().string())) out.push_back(*n);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string ModelRegistry::save_version(const ModelBundle& bundle) {
    bundle.validate();
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(Errc::storage_failure, fmt::format("cannot create '{}': {}", root_.string(), ec.message()));

    WriterLock lock(root_);
    // Leftovers of interrupted saves are never referenced.
    for (const auto& entry : fs::directory_iterator(root_, ec)) {
        if (entry.path().filename().string().starts_with(".tmp-")) fs::remove_all(entry.path(), ec);
    }

    const auto numbers = version_numbers();
    const int next = numbers.empty() ? 1 : numbers.back() + 1;
    const std::string version = fmt::format("v{}", next);
    ModelMetadata meta = bundle.metadata;
    meta.version = version;
    if (meta.created_at.empty()) meta.created_at = utc_timestamp_now();

    const fs::path staging = root_ / fmt::format(".tmp-{}-{}", version, ::getpid());
    fs::remove_all(staging, ec);
    if (!fs::create_directory(staging, ec) || ec)
        throw Error(Errc::storage_failure, fmt::format("cannot create '{}'", staging.string()));
    write_durable(staging / kModelFile, serialize_model(bundle.model));
    write_durable(staging / kPreprocessorFile, bundle.preprocessor.to_json().dump(2));
    write_durable(staging / kMetadataFile, meta.to_json().dump(2));
    sync_dir(staging);
    fault("save:written");

    fs::rename(staging, root_ / version, ec);
    if (ec) {
        fs::remove_all(staging, ec);
        throw Error(Errc::storage_failure, fmt::format("cannot publish {}", version));
    }
    sync_dir(root_);
    return version;
}

ModelBundle ModelRegistry::load_version(std::string_view version) const {
    if (!parse_version(version)) throw Error(Errc::unknown_version, fmt::format("'{}' is not a version id", version));
    const fs::path dir = root_ / std::string(version);
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(Errc::unknown_version, fmt::format("no version {}", version));

    try {
        ModelBundle b;
        b.metadata = ModelMetadata::from_json(nlohmann::json::parse(read_text_file(dir / kMetadataFile)));
        b.preprocessor = PreprocessorParams::from_json(nlohmann::json::parse(read_text_file(dir / kPreprocessorFile)));
        b.model = deserialize_model(read_text_file(dir / kModelFile), b.metadata.schema_hash);
        if (b.metadata.version != version)
            throw Error(Errc::corrupt_bundle, fmt::format("metadata names {}", b.metadata.version));
        b.validate();
        return b;
    } catch (const Error& e) {
        throw Error(Errc::corrupt_bundle, fmt::format("{}: {}", version, e.what()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_bundle, fmt::format("{}: {}", version, e.what()));
    }
}

std::optional<std::string> ModelRegistry::active_version() const {
    std::error_code ec;
    if (!fs::exists(root_ / kActiveFile, ec)) return std::nullopt;
    try {
        return trim(read_text_file(root_ / kActiveFile));
    } catch (const Error&) {
        return std::nullopt;
    }
}

ModelBundle ModelRegistry::load_active() const {
    const auto active = active_version();
    if (!active) throw Error(Errc::no_active_model, "no active model version");
    try {
        return load_version(*active);
    } catch (const Error& e) {
        throw Error(Errc::corrupt_bundle, fmt::format("active pointer '{}' is unusable: {}", *active, e.what()));
    }
}

void ModelRegistry::activate_locked(std::string_view version) {
    load_version(version);  // refuse to point at anything unservable
    const fs::path tmp = root_ / (std::string(kActiveFile) + ".tmp");
    write_durable(tmp, fmt::format("{}\n", version));
    fault("activate:written");
    std::error_code ec;
    fs::rename(tmp, root_ / kActiveFile, ec);
    if (ec) throw Error(Errc::storage_failure, fmt::format("cannot swap active pointer: {}", ec.message()));
    sync_dir(root_);
}

void ModelRegistry::set_active(std::string_view version) {
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) throw Error(Errc::unknown_version, fmt::format("no version {}", version));
    WriterLock lock(root_);
    activate_locked(version);
}

std::vector<ModelMetadata> ModelRegistry::list_versions() const {
    std::vector<ModelMetadata> out;
    for (int n : version_numbers()) {
        try {
            out.push_back(ModelMetadata::from_json(
                nlohmann::json::parse(read_text_file(root_ / fmt::format("v{}", n) / kMetadataFile))));
        } catch (const std::exception&) {
            // unreadable versions are not listed
        }
    }
    return out;
}

std::string ModelRegistry::rollback() {
    std::error_code ec;
    if (!fs::is_directory(root_, ec)) throw Error(Errc::nothing_to_roll_back, "registry is empty");
    WriterLock lock(root_);
    const auto active = active_version();
    const auto current = active ? parse_version(*active) : std::nullopt;
    if (!current) throw Error(Errc::nothing_to_roll_back, "no active version");
    auto numbers = version_numbers();
    for (auto it = numbers.rbegin(); it != numbers.rend(); ++it) {
        if (*it >= *current) continue;
        const std::string candidate = fmt::format("v{}", *it);
        try {
            activate_locked(candidate);
            return candidate;
        } catch (const Error& e) {
            if (e.code() != Errc::corrupt_bundle) throw;
        }
    }
    throw Error(Errc::nothing_to_roll_back, fmt::format("no loadable version below {}", *active));
}

} // namespace cfready
