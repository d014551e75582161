#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace knet {

// Argument outside the domain of a function (x outside [0,2), zero
// denominator, point outside the unit cube, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Inconsistent construction parameters (gamma < 2d+2, bad inner weights,
// mismatched branch counts).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed user input: CSV rows, duplicated sample points, non-finite
// oracle values.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A broken internal invariant (for instance a damped iteration that
// started to diverge).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Structured parse failure for model documents. `location` is a JSON
// pointer or "byte N" for syntax errors.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string location, const std::string& message)
        : std::runtime_error(location + ": " + message), location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

}  // namespace knet
