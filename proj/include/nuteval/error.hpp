#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nuteval {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Input data violates a schema or a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Caller broke an operation precondition (bad k, empty input, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Language-model client failure, replay miss, or unusable reply.
class LlmError : public Error {
public:
    using Error::Error;
};

enum class Severity { Info, Warning, Error };

// Non-fatal finding attached to a result instead of being thrown.
struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string message;
    std::optional<std::size_t> line;  // 1-based line in the source file, if any
};

using Diagnostics = std::vector<Diagnostic>;

std::string to_string(const Diagnostic& d);

}  // namespace nuteval
