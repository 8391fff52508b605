#pragma once

#include <stdexcept>
#include <string>

namespace vizsig {

enum class Errc {
    io,
    malformed_header,
    truncated_payload,
    duplicate_id,
    non_finite,
    malformed_line,
    invalid_argument,
    dimension_mismatch,
    missing_metadata,
    degenerate,
    numerical,
};

const char* errc_name(Errc code) noexcept;

/// Library-wide exception. The code distinguishes failure classes so callers
/// (and the CLI exit-code mapping) never have to parse message text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace vizsig
