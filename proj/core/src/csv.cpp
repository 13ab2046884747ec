#include "cfready/csv.hpp"

#include "cfready/error.hpp"

namespace cfready::csv {

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += escape(row[i]);
    }
    out += "\r\n";
    return out;
}

std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            quoted = true;
            field_started = true;
            break;
        case ',':
            end_field();
            field_started = true;  // a trailing comma still opens an empty field
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
            break;
        case '\n':
            end_row();
            break;
        default:
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw Error(Errc::io_failure, "unterminated quoted CSV field");
    if (field_started || !row.empty()) end_row();
    return rows;
}

} // namespace cfready::csv
