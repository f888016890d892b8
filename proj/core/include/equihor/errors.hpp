#pragma once

#include <stdexcept>
#include <string>

namespace equihor {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// The problem lacks something an operation needs (e.g. a closed-form tail).
class UnsupportedProblem : public Error {
public:
    using Error::Error;
};

// A backward sweep produced a non-finite value.
class StabilityError : public Error {
public:
    StabilityError(const std::string& what, double t, std::size_t index)
        : Error(what), time_(t), index_(index) {}

    double time() const noexcept { return time_; }
    std::size_t index() const noexcept { return index_; }

private:
    double time_;
    std::size_t index_;
};

// Two fields that should share a grid do not.
class CompositionError : public Error {
public:
    using Error::Error;
};

// A structural hypothesis on the data fails on sampled points.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Too many simulated paths left the guard box.
class GuardError : public Error {
public:
    using Error::Error;
};

}  // namespace equihor
