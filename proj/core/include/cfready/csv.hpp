#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cfready::csv {

using Row = std::vector<std::string>;

// RFC 4180: fields containing comma, quote, CR or LF are quoted, quotes doubled.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

// Accepts LF or CRLF line endings and a trailing newline. Throws
// Error(io_failure) on an unterminated quoted field.
std::vector<Row> parse(std::string_view text);

} // namespace cfready::csv
