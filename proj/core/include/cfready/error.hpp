#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfready {

// Failure categories raised by the pipeline, registry and service layers.
// Upstream API failures use ClientError (see cf_client.hpp) instead.
enum class Errc {
    invalid_argument,
    degenerate_input,
    empty_history,
    negative_input,
    unknown_label,
    schema_mismatch,
    empty_node,
    insufficient_data,
    corrupt_model,
    degenerate_class,
    length_mismatch,
    storage_failure,
    inconsistent_bundle,
    unknown_version,
    corrupt_bundle,
    no_active_model,
    nothing_to_roll_back,
    io_failure,
    empty_output,
    port_in_use,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace cfready
