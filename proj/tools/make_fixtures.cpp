// Writes the upstream-format fixture tree used by the tests and by
// `cfready --fixtures`. Usage: cfready_make_fixtures <dir>

#include <algorithm>
#include <filesystem>
#include <iostream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "cfready/cf_types.hpp"
#include "cfready/dataset_io.hpp"
#include "cfready/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cfready;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& doc) {
    write_text_file(path, doc.dump(1) + "\n");
}

void write_user(const fs::path& dir, const UserActivity& a) {
    json rating = json::array();
    for (const auto& rc : a.rating_history) {
        json e = to_wire(rc);
        e["handle"] = a.handle;
        e["contestName"] = fmt::format("Codeforces Round {}", rc.contest_id);
        rating.push_back(std::move(e));
    }
    write_json(dir / "user.rating" / (a.handle + ".json"), ok_envelope(std::move(rating)));

    json status = json::array();
    // upstream lists submissions newest first
    for (auto it = a.submissions.rbegin(); it != a.submissions.rend(); ++it) status.push_back(to_wire(*it));
    write_json(dir / "user.status" / (a.handle + ".json"), ok_envelope(std::move(status)));
}

Submission sub(std::int64_t id, std::int64_t t, std::string key, Verdict v, std::optional<int> rating,
               std::vector<std::string> tags) {
    return Submission{id, t, std::move(key), v, rating, std::move(tags)};
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: cfready_make_fixtures <dir>\n";
        return 2;
    }
    const fs::path dir = argv[1];
    try {
        for (int n = 1; n <= 3; ++n) write_user(dir, synthesize_activity(archetype_profile(n)));

        // More than one user.status page at the maximum page size.
        SyntheticProfile paged = archetype_profile(1);
        paged.handle = "paged_user";
        paged.label = 1;
        paged.activity_seed = 9001;
        paged.best_rating = 1500;
        paged.problems_solved = 700;
        paged.contests = 60;
        paged.acceptance_ratio = 0.466;
        paged.span_days = 800;
        write_user(dir, synthesize_activity(paged));

        UserActivity two;
        two.handle = "two_contests";
        two.rating_history = {{1, 1'600'000'000, 2500, 0, 1200}, {2, 1'602'592'000, 1800, 1200, 1350}};
        two.submissions = {
            sub(11, 1'600'000'100, "1A", Verdict::accepted, 800, {"implementation"}),
            sub(12, 1'600'086'500, "1B", Verdict::rejected_other, 1200, {"greedy", "math"}),
            sub(13, 1'600'172'900, "1B", Verdict::accepted, 1200, {"greedy", "math"}),
            sub(14, 1'602'592'100, "2C", Verdict::accepted, std::nullopt, {"dp"}),
        };
        write_user(dir, two);

        UserActivity unrated;
        unrated.handle = "unrated_user";
        unrated.submissions = {
            sub(21, 1'650'000'000, "1520A", Verdict::accepted, 800, {"implementation"}),
            sub(22, 1'650'000'600, "1520B", Verdict::rejected_other, 1000, {"brute force"}),
            sub(23, 1'650'001'200, "1520B", Verdict::rejected_other, 1000, {"brute force"}),
        };
        write_user(dir, unrated);

        // A stored FAILED envelope answers with HTTP 400 like upstream.
        write_json(dir / "user.rating" / "banned_user.json", failed_envelope("handle: User banned_user is banned"));
        write_json(dir / "user.status" / "banned_user.json", failed_envelope("handle: User banned_user is banned"));

        json problems = json::array({
            to_wire(Problem{"1A", 800, {"implementation"}}),
            to_wire(Problem{"1B", 1200, {"greedy", "math"}}),
            to_wire(Problem{"2C", std::nullopt, {"dp"}}),
        });
        write_json(dir / "problemset.problems.json",
                   ok_envelope(json{{"problems", std::move(problems)}, {"problemStatistics", json::array()}}));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << "fixtures written to " << dir << '\n';
    return 0;
}
