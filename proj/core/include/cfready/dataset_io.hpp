#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfready/eval.hpp"
#include "cfready/features.hpp"
#include "cfready/preprocessing.hpp"

namespace cfready {

struct DatasetRecord {
    std::string handle;
    int label = 0;
    FeatureVector features;

    bool operator==(const DatasetRecord&) const = default;
};

// Raw feature columns in file order, tag columns excluded.
std::vector<std::string> dataset_feature_columns();

// Header: handle,label,<raw features>,tag.<name>... (tags sorted by name).
// Absent optional features are empty cells; labels are written as status codes.
std::string format_dataset(std::span<const DatasetRecord> records);
// Throws Error(io_failure | schema_mismatch | unknown_label | invalid_argument).
std::vector<DatasetRecord> parse_dataset(std::string_view text);

void save_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

struct LabelEntry {
    std::string handle;
    int label = 0;

    bool operator==(const LabelEntry&) const = default;
};

// CSV rows of handle,label with an optional "handle,label" header. Labels are
// either a status code 0..3 or a job-status name (case-insensitive).
// Throws Error(invalid_argument) on duplicate handles, Error(unknown_label).
std::vector<LabelEntry> parse_label_file(std::string_view text);
std::vector<LabelEntry> load_label_file(const std::filesystem::path& path);

int parse_label(std::string_view text);

std::vector<FeatureVector> feature_vectors(std::span<const DatasetRecord> records);
std::vector<int> record_labels(std::span<const DatasetRecord> records);

std::string read_text_file(const std::filesystem::path& path);
// Write to a sibling temp file, fsync, rename. Throws Error(io_failure).
void write_text_file(const std::filesystem::path& path, std::string_view content);

} // namespace cfready
