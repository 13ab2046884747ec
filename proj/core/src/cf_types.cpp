#include "cfready/cf_types.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/core.h>

namespace cfready {

using nlohmann::json;

std::string_view to_string(ClientErrorKind kind) noexcept {
    switch (kind) {
    case ClientErrorKind::handle_not_found: return "handle_not_found";
    case ClientErrorKind::upstream_rejected: return "upstream_rejected";
    case ClientErrorKind::malformed_response: return "malformed_response";
    case ClientErrorKind::network_failure: return "network_failure";
    }
    return "unknown";
}

ClientError::ClientError(ClientErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

namespace {

[[noreturn]] void malformed(const std::string& what) {
    throw ClientError(ClientErrorKind::malformed_response, what);
}

const json& require(const json& j, const char* key) {
    if (!j.is_object()) malformed(fmt::format("expected object holding '{}'", key));
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) malformed(fmt::format("missing field '{}'", key));
    return *it;
}

std::int64_t require_int(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer()) malformed(fmt::format("field '{}' is not an integer", key));
    return v.get<std::int64_t>();
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string problem_key_of(const json& problem) {
    const json& index = require(problem, "index");
    if (!index.is_string() || index.get<std::string>().empty())
        malformed("problem index is empty or not a string");
    std::string prefix;
    if (auto it = problem.find("contestId"); it != problem.end() && it->is_number_integer()) {
        prefix = std::to_string(it->get<std::int64_t>());
    } else if (auto ps = problem.find("problemsetName"); ps != problem.end() && ps->is_string()) {
        prefix = ps->get<std::string>() + ":";
    } else {
        malformed("problem has neither contestId nor problemsetName");
    }
    return prefix + index.get<std::string>();
}

std::optional<int> rating_of(const json& problem) {
    auto it = problem.find("rating");
    if (it == problem.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) malformed("problem rating is not an integer");
    const int rating = it->get<int>();
    if (rating < kMinProblemRating || rating > kMaxProblemRating)
        malformed(fmt::format("problem rating {} outside [{}, {}]", rating, kMinProblemRating,
                              kMaxProblemRating));
    return rating;
}

std::vector<std::string> tags_of(const json& problem) {
    auto it = problem.find("tags");
    if (it == problem.end() || it->is_null()) return {};
    if (!it->is_array()) malformed("problem tags is not an array");
    std::vector<std::string> tags;
    for (const auto& t : *it) {
        if (!t.is_string()) malformed("problem tag is not a string");
        tags.push_back(t.get<std::string>());
    }
    return normalize_tags(tags);
}

// Splits "1520A" into (1520, "A"); keys without a numeric prefix use problemsetName.
void put_problem_key(json& problem, const std::string& key) {
    if (auto colon = key.find(':'); colon != std::string::npos) {
        problem["problemsetName"] = key.substr(0, colon);
        problem["index"] = key.substr(colon + 1);
        return;
    }
    std::size_t digits = 0;
    while (digits < key.size() && std::isdigit(static_cast<unsigned char>(key[digits]))) ++digits;
    problem["contestId"] = std::stoll(key.substr(0, digits));
    problem["index"] = key.substr(digits);
}

} // namespace

std::vector<std::string> normalize_tags(const std::vector<std::string>& tags) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& t : tags) {
        auto lower = lowercase(t);
        if (lower.empty()) continue;
        if (seen.insert(lower).second) out.push_back(std::move(lower));
    }
    return out;
}

json validate_envelope(const json& payload) {
    if (!payload.is_object()) malformed("envelope is not an object");
    auto status = payload.find("status");
    if (status == payload.end() || !status->is_string()) malformed("envelope has no status");
    const auto s = status->get<std::string>();
    if (s == "OK") {
        auto result = payload.find("result");
        if (result == payload.end()) malformed("status OK without result");
        return *result;
    }
    if (s == "FAILED") {
        std::string comment;
        if (auto c = payload.find("comment"); c != payload.end() && c->is_string())
            comment = c->get<std::string>();
        if (lowercase(comment).find("not found") != std::string::npos)
            throw ClientError(ClientErrorKind::handle_not_found, comment);
        throw ClientError(ClientErrorKind::upstream_rejected, comment);
    }
    malformed(fmt::format("unexpected status '{}'", s));
}

RatingChange parse_rating_change(const json& j) {
    RatingChange rc;
    rc.contest_id = require_int(j, "contestId");
    rc.contest_time = require_int(j, "ratingUpdateTimeSeconds");
    rc.rank = require_int(j, "rank");
    rc.old_rating = static_cast<int>(require_int(j, "oldRating"));
    rc.new_rating = static_cast<int>(require_int(j, "newRating"));
    if (rc.rank < 1) malformed(fmt::format("rank {} below 1", rc.rank));
    return rc;
}

Submission parse_submission(const json& j) {
    Submission s;
    s.submission_id = require_int(j, "id");
    s.submit_time = require_int(j, "creationTimeSeconds");
    const json& problem = require(j, "problem");
    s.problem_key = problem_key_of(problem);
    s.problem_rating = rating_of(problem);
    s.tags = tags_of(problem);
    // Submissions still in the queue carry no verdict.
    auto v = j.find("verdict");
    s.verdict = (v != j.end() && v->is_string() && v->get<std::string>() == "OK")
                    ? Verdict::accepted
                    : Verdict::rejected_other;
    return s;
}

Problem parse_problem(const json& j) {
    Problem p;
    p.problem_key = problem_key_of(j);
    p.rating = rating_of(j);
    p.tags = tags_of(j);
    return p;
}

json to_wire(const RatingChange& rc) {
    return json{{"contestId", rc.contest_id},
                {"rank", rc.rank},
                {"ratingUpdateTimeSeconds", rc.contest_time},
                {"oldRating", rc.old_rating},
                {"newRating", rc.new_rating}};
}

json to_wire(const Problem& p) {
    json problem = json::object();
    put_problem_key(problem, p.problem_key);
    if (p.rating) problem["rating"] = *p.rating;
    problem["tags"] = p.tags;
    return problem;
}

json to_wire(const Submission& s) {
    json problem = to_wire(Problem{s.problem_key, s.problem_rating, s.tags});
    return json{{"id", s.submission_id},
                {"creationTimeSeconds", s.submit_time},
                {"problem", std::move(problem)},
                {"verdict", s.verdict == Verdict::accepted ? "OK" : "WRONG_ANSWER"}};
}

json ok_envelope(json result) {
    return json{{"status", "OK"}, {"result", std::move(result)}};
}

json failed_envelope(std::string_view comment) {
    return json{{"status", "FAILED"}, {"comment", comment}};
}

} // namespace cfready
