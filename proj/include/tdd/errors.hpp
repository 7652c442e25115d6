#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tdd {

/// Failure categories raised by the library. Every throw site picks one so
/// callers (and the CLI) can map failures to messages and exit codes.
enum class ErrorKind {
    invalid_parameter,
    invalid_dimension,
    symmetry_violation,
    unsupported_spectrum,
    bound_undefined,
    bound_not_applicable,
    not_applicable,
    invalid_input,
    factorization,
    divergence,
    too_few_iterations,
    io,
    usage,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_parameter: return "invalid-parameter";
        case ErrorKind::invalid_dimension: return "invalid-dimension";
        case ErrorKind::symmetry_violation: return "symmetry-violation";
        case ErrorKind::unsupported_spectrum: return "unsupported-spectrum";
        case ErrorKind::bound_undefined: return "bound-undefined";
        case ErrorKind::bound_not_applicable: return "bound-not-applicable";
        case ErrorKind::not_applicable: return "not-applicable";
        case ErrorKind::invalid_input: return "invalid-input";
        case ErrorKind::factorization: return "factorization";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::too_few_iterations: return "too-few-iterations";
        case ErrorKind::io: return "io";
        case ErrorKind::usage: return "usage";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message)
        , kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by banded factorizations; `pivot` is the 1-based index of the
/// first exactly-zero pivot.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, long pivot)
        : Error(ErrorKind::factorization, what + " (zero pivot at index " + std::to_string(pivot) + ")")
        , pivot_(pivot) {}

    long pivot() const noexcept { return pivot_; }

private:
    long pivot_;
};

}  // namespace tdd
