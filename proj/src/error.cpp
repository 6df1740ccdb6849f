#include "ibsgrasp/error.hpp"

namespace ibsgrasp {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InsufficientPoints: return "InsufficientPoints";
        case ErrorCode::DegenerateNeighborhood: return "DegenerateNeighborhood";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::ChartOverflow: return "ChartOverflow";
        case ErrorCode::EmptyCrop: return "EmptyCrop";
        case ErrorCode::NoSurface: return "NoSurface";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::CannotOptimize: return "CannotOptimize";
        case ErrorCode::BadInit: return "BadInit";
        case ErrorCode::OptimizationFailed: return "OptimizationFailed";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

FormatError::FormatError(std::size_t offset, const std::string& message)
    : Error(ErrorCode::FormatError, "offset " + std::to_string(offset) + ": " + message),
      offset_(offset) {}

}  // namespace ibsgrasp
