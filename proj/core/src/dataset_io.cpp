#include "cfready/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/core.h>

#include "cfready/csv.hpp"
#include "cfready/error.hpp"

namespace cfready {

namespace {

constexpr std::string_view kTagColumn = "tag.";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string cell(const std::optional<double>& v) {
    return v ? fmt::format("{}", *v) : std::string();
}

double parse_double(std::string_view s, std::string_view column) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(Errc::io_failure, fmt::format("column '{}': '{}' is not a number", column, s));
    return x;
}

std::int64_t parse_int(std::string_view s, std::string_view column) {
    std::int64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(Errc::io_failure, fmt::format("column '{}': '{}' is not an integer", column, s));
    return x;
}

using Reader = void (*)(FeatureVector&, std::string_view, std::string_view);
using Writer = std::string (*)(const FeatureVector&);

struct RawColumn {
    std::string name;
    Writer write;
    Reader read;
};

#define CF_OPT(field)                                                                          \
    RawColumn {                                                                                \
        #field, [](const FeatureVector& v) { return cell(v.field); },                          \
            [](FeatureVector& v, std::string_view s, std::string_view c) {                     \
                if (!s.empty()) v.field = parse_double(s, c);                                  \
            }                                                                                  \
    }
#define CF_INT(field)                                                                          \
    RawColumn {                                                                                \
        #field, [](const FeatureVector& v) { return std::to_string(v.field); },                \
            [](FeatureVector& v, std::string_view s, std::string_view c) { v.field = parse_int(s, c); } \
    }
#define CF_DBL(field)                                                                          \
    RawColumn {                                                                                \
        #field, [](const FeatureVector& v) { return fmt::format("{}", v.field); },             \
            [](FeatureVector& v, std::string_view s, std::string_view c) { v.field = parse_double(s, c); } \
    }

template <std::size_t B>
RawColumn difficulty_column() {
    return RawColumn{fmt::format("difficulty.{}", kDifficultyNames[B]),
                     [](const FeatureVector& v) { return std::to_string(v.solved_by_difficulty[B]); },
                     [](FeatureVector& v, std::string_view s, std::string_view c) {
                         v.solved_by_difficulty[B] = parse_int(s, c);
                     }};
}

const std::vector<RawColumn>& raw_columns() {
    static const std::vector<RawColumn> cols = [] {
        std::vector<RawColumn> c{
            CF_OPT(best_rating),       CF_INT(total_contests),      CF_INT(total_problems_solved),
            CF_INT(total_submissions), CF_OPT(avg_problem_rating),  CF_OPT(acceptance_ratio),
            CF_OPT(best_rank),         CF_OPT(avg_rank),            CF_DBL(contests_per_month),
            CF_DBL(submissions_per_day), CF_INT(days_active),
        };
        c.push_back(difficulty_column<0>());
        c.push_back(difficulty_column<1>());
        c.push_back(difficulty_column<2>());
        c.push_back(difficulty_column<3>());
        c.push_back(difficulty_column<4>());
        c.push_back(CF_DBL(rating_progression));
        c.push_back(CF_DBL(improvement_rate));
        static_assert(kDifficultyBuckets == 5);
        return c;
    }();
    return cols;
}

#undef CF_OPT
#undef CF_INT
#undef CF_DBL

} // namespace

std::vector<std::string> dataset_feature_columns() {
    std::vector<std::string> names;
    for (const auto& c : raw_columns()) names.push_back(c.name);
    return names;
}

std::string format_dataset(std::span<const DatasetRecord> records) {
    std::set<std::string> tags;
    for (const auto& r : records) {
        for (const auto& [t, n] : r.features.solved_by_tag) tags.insert(t);
    }
    csv::Row header{"handle", "label"};
    for (const auto& c : raw_columns()) header.push_back(c.name);
    for (const auto& t : tags) header.push_back(std::string(kTagColumn) + t);

    std::string out = csv::format_row(header);
    for (const auto& r : records) {
        csv::Row row{r.handle, std::to_string(r.label)};
        for (const auto& c : raw_columns()) row.push_back(c.write(r.features));
        for (const auto& t : tags) {
            const auto it = r.features.solved_by_tag.find(t);
            row.push_back(it == r.features.solved_by_tag.end() ? std::string() : std::to_string(it->second));
        }
        out += csv::format_row(row);
    }
    return out;
}

std::vector<DatasetRecord> parse_dataset(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw Error(Errc::io_failure, "dataset file is empty");
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "handle" || header[1] != "label")
        throw Error(Errc::schema_mismatch, "dataset header must start with handle,label");

    std::map<std::string, const RawColumn*> by_name;
    for (const auto& c : raw_columns()) by_name[c.name] = &c;
    std::vector<const RawColumn*> readers(header.size(), nullptr);
    std::set<std::string> seen;
    for (std::size_t i = 2; i < header.size(); ++i) {
        if (!seen.insert(header[i]).second)
            throw Error(Errc::schema_mismatch, fmt::format("duplicate dataset column '{}'", header[i]));
        if (header[i].starts_with(kTagColumn)) continue;
        const auto it = by_name.find(header[i]);
        if (it == by_name.end()) throw Error(Errc::schema_mismatch, fmt::format("unknown dataset column '{}'", header[i]));
        readers[i] = it->second;
    }
    for (const auto& c : raw_columns()) {
        if (!seen.count(c.name)) throw Error(Errc::schema_mismatch, fmt::format("dataset lacks column '{}'", c.name));
    }

    std::vector<DatasetRecord> out;
    std::set<std::string> handles;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;  // blank line
        if (row.size() != header.size())
            throw Error(Errc::schema_mismatch, fmt::format("dataset row {} has {} cells, header has {}", r + 1,
                                                           row.size(), header.size()));
        DatasetRecord rec;
        rec.handle = row[0];
        if (!handles.insert(rec.handle).second)
            throw Error(Errc::invalid_argument, fmt::format("duplicate handle '{}' in dataset", rec.handle));
        rec.label = parse_label(row[1]);
        for (std::size_t i = 2; i < row.size(); ++i) {
            if (readers[i]) {
                readers[i]->read(rec.features, row[i], header[i]);
            } else if (!row[i].empty()) {
                const auto n = parse_int(row[i], header[i]);
                if (n < 0) throw Error(Errc::io_failure, fmt::format("negative tag count in '{}'", header[i]));
                if (n > 0) rec.features.solved_by_tag[header[i].substr(kTagColumn.size())] = n;
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records) {
    write_text_file(path, format_dataset(records));
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
    return parse_dataset(read_text_file(path));
}

int parse_label(std::string_view text) {
    const std::string t = trim(text);
    if (t.size() == 1 && t[0] >= '0' && t[0] < '0' + kNumClasses) return t[0] - '0';
    const std::string l = lower(t);
    for (int c = 0; c < kNumClasses; ++c) {
        if (lower(kStatusLabels[c]) == l) return c;
    }
    throw Error(Errc::unknown_label, fmt::format("unknown job status '{}'", t));
}

std::vector<LabelEntry> parse_label_file(std::string_view text) {
    const auto rows = csv::parse(text);
    std::vector<LabelEntry> out;
    std::set<std::string> handles;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        if (row.size() != 2) throw Error(Errc::io_failure, fmt::format("label file row {}: expected 2 cells", r + 1));
        if (r == 0 && lower(trim(row[0])) == "handle") continue;
        LabelEntry e{trim(row[0]), parse_label(row[1])};
        if (e.handle.empty()) throw Error(Errc::invalid_argument, fmt::format("label file row {}: empty handle", r + 1));
        if (!handles.insert(e.handle).second)
            throw Error(Errc::invalid_argument, fmt::format("duplicate handle '{}' in label file", e.handle));
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<LabelEntry> load_label_file(const std::filesystem::path& path) {
    return parse_label_file(read_text_file(path));
}

std::vector<FeatureVector> feature_vectors(std::span<const DatasetRecord> records) {
    std::vector<FeatureVector> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.features);
    return out;
}

std::vector<int> record_labels(std::span<const DatasetRecord> records) {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_failure, fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(Errc::io_failure, fmt::format("cannot read '{}'", path.string()));
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(Errc::io_failure, fmt::format("cannot create '{}'", tmp));
    std::size_t done = 0;
    while (done < content.size()) {
        const auto n = ::write(fd, content.data() + done, content.size() - done);
        if (n <= 0) {
            ::close(fd);
            ::unlink(tmp.c_str());
            throw Error(Errc::io_failure, fmt::format("short write to '{}'", tmp));
        }
        done += static_cast<std::size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced || std::rename(tmp.c_str(), path.c_str()) != 0) {
        ::unlink(tmp.c_str());
        throw Error(Errc::io_failure, fmt::format("cannot replace '{}'", path.string()));
    }
}

} // namespace cfready
