#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ibsgrasp {

enum class ErrorCode {
    EmptyInput,
    InsufficientPoints,
    DegenerateNeighborhood,
    ParseError,
    ValidationError,
    ChartOverflow,
    EmptyCrop,
    NoSurface,
    FormatError,
    CannotOptimize,
    BadInit,
    OptimizationFailed,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Malformed text input, with the 1-based line it was detected on.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message);

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Malformed binary input, with the byte offset it was detected at.
class FormatError : public Error {
public:
    FormatError(std::size_t offset, const std::string& message);

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace ibsgrasp
