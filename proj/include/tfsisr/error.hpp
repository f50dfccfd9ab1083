// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tfsisr {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    malformed_header,
    size_mismatch,
    non_finite,
    io_failure,
    singular_system,
    degenerate_input,
};

[[nodiscard]] inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid argument";
        case ErrorCode::dimension_mismatch: return "dimension mismatch";
        case ErrorCode::malformed_header: return "malformed header";
        case ErrorCode::size_mismatch: return "size mismatch";
        case ErrorCode::non_finite: return "non-finite value";
        case ErrorCode::io_failure: return "i/o failure";
        case ErrorCode::singular_system: return "singular system";
        case ErrorCode::degenerate_input: return "degenerate input";
    }
    return "unknown error";
}

/// Every failure in the library is reported as an Error carrying a category.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace tfsisr
