#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fanrecon {

enum class ErrorCode {
    invalid_argument,
    out_of_range,
    invalid_geometry,
    dimension_mismatch,
    format,
    io,
    domain,
    resource_exhausted,
    invalid_state,
    not_implemented,
    not_found,
    conflict,
};

std::string_view to_string(ErrorCode code);

// Every error raised by the library carries a category and, where it makes
// sense, the name of the offending configuration field.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {})
        : std::runtime_error(message), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

// Text-format error; line is 1-based, 0 when no single line is to blame.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::size_t line)
        : Error(ErrorCode::format, message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace fanrecon
