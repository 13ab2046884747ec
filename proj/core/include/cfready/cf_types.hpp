#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cfready {

struct RatingChange {
    std::int64_t contest_id = 0;
    std::int64_t contest_time = 0;  // unix seconds
    std::int64_t rank = 1;
    int old_rating = 0;
    int new_rating = 0;

    bool operator==(const RatingChange&) const = default;
};

// Only acceptance matters downstream, so upstream verdicts collapse to two values.
enum class Verdict { accepted, rejected_other };

struct Submission {
    std::int64_t submission_id = 0;
    std::int64_t submit_time = 0;  // unix seconds
    std::string problem_key;       // contest id + problem index, e.g. "1520A"
    Verdict verdict = Verdict::rejected_other;
    std::optional<int> problem_rating;
    std::vector<std::string> tags;

    bool operator==(const Submission&) const = default;
};

struct Problem {
    std::string problem_key;
    std::optional<int> rating;
    std::vector<std::string> tags;  // lowercase, deduplicated

    bool operator==(const Problem&) const = default;
};

inline constexpr int kMinProblemRating = 800;
inline constexpr int kMaxProblemRating = 3500;

enum class ClientErrorKind {
    handle_not_found,
    upstream_rejected,
    malformed_response,
    network_failure,
};

std::string_view to_string(ClientErrorKind kind) noexcept;

class ClientError : public std::runtime_error {
public:
    ClientError(ClientErrorKind kind, const std::string& detail);

    ClientErrorKind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }
    bool retryable() const noexcept { return kind_ == ClientErrorKind::network_failure; }

private:
    ClientErrorKind kind_;
    std::string detail_;
};

// Returns the "result" member of an upstream envelope or throws ClientError.
nlohmann::json validate_envelope(const nlohmann::json& payload);

// Wire decoding. All throw ClientError(malformed_response) on shape violations.
RatingChange parse_rating_change(const nlohmann::json& j);
Submission parse_submission(const nlohmann::json& j);
Problem parse_problem(const nlohmann::json& j);

// Wire encoding in the upstream API's field layout (used for fixtures).
nlohmann::json to_wire(const RatingChange& rc);
nlohmann::json to_wire(const Submission& s);
nlohmann::json to_wire(const Problem& p);
nlohmann::json ok_envelope(nlohmann::json result);
nlohmann::json failed_envelope(std::string_view comment);

std::vector<std::string> normalize_tags(const std::vector<std::string>& tags);

} // namespace cfready
