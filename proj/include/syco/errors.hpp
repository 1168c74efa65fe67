#pragma once

#include <stdexcept>
#include <string>

namespace syco {

// Base for everything thrown by the harness. CLI maps these to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

struct ValidationError : Error {
    ValidationError(std::string id, const std::string& reason)
        : Error("question '" + id + "': " + reason), id(std::move(id)) {}
    std::string id;
};

struct RangeError : Error {
    using Error::Error;
};

struct TemplateError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Non-retryable credential failure (401/403 or unresolvable token).
struct AuthError : Error {
    using Error::Error;
};

struct ProviderError : Error {
    ProviderError(int status, const std::string& body)
        : Error("provider returned status " + std::to_string(status) + ": " + body),
          status(status) {}
    int status;
};

struct TimeoutError : Error {
    using Error::Error;
};

// No vanilla-correct questions: S_r and S_a are undefined, not zero.
struct EmptyQcError : Error {
    using Error::Error;
};

struct EmptyDatasetError : Error {
    using Error::Error;
};

// A metric or pipeline invariant was violated (CLI exit code 3).
struct InvariantError : Error {
    using Error::Error;
};

}  // namespace syco
