#pragma once

#include <stdexcept>
#include <string>

namespace kinesim {

// Error taxonomy mirrors the CLI exit-code contract:
// usage/validation (2), infeasible (3), I/O (4), trace (5).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct InsufficientDataError : Error {
    using Error::Error;
};

struct InfeasibleError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct TraceFormatError : Error {
    TraceFormatError(std::size_t line, const std::string& what)
        : Error("trace line " + std::to_string(line) + ": " + what), line_number(line) {}
    std::size_t line_number;
};

struct TraceOrderError : Error {
    TraceOrderError(std::size_t line, const std::string& what)
        : Error("trace line " + std::to_string(line) + ": " + what), line_number(line) {}
    std::size_t line_number;
};

} // namespace kinesim
