#include "cfready/error.hpp"

namespace cfready {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::empty_history: return "empty_history";
    case Errc::negative_input: return "negative_input";
    case Errc::unknown_label: return "unknown_label";
    case Errc::schema_mismatch: return "schema_mismatch";
    case Errc::empty_node: return "empty_node";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::corrupt_model: return "corrupt_model";
    case Errc::degenerate_class: return "degenerate_class";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::storage_failure: return "storage_failure";
    case Errc::inconsistent_bundle: return "inconsistent_bundle";
    case Errc::unknown_version: return "unknown_version";
    case Errc::corrupt_bundle: return "corrupt_bundle";
    case Errc::no_active_model: return "no_active_model";
    case Errc::nothing_to_roll_back: return "nothing_to_roll_back";
    case Errc::io_failure: return "io_failure";
    case Errc::empty_output: return "empty_output";
    case Errc::port_in_use: return "port_in_use";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

} // namespace cfready
