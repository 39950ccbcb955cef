#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace distill {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand sizes or shapes do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A dense matrix would exceed the supported side length.
class CapExceeded : public Error {
public:
    CapExceeded(const std::string& what, std::size_t requested, std::size_t cap)
        : Error(what + ": requested " + std::to_string(requested) + " exceeds cap " +
                std::to_string(cap)),
          requested_(requested), cap_(cap) {}

    std::size_t requested() const noexcept { return requested_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t requested_;
    std::size_t cap_;
};

/// A domain-type invariant failed. `invariant()` names which one, e.g. "trace",
/// "hermitian", "psd", "orthonormal".
class InvariantError : public Error {
public:
    InvariantError(std::string invariant, const std::string& detail)
        : Error(invariant + " invariant violated: " + detail), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

/// An operator outcome whose probability is below the branch threshold.
/// Carries the raw (unnormalized) trace so callers can tell a structurally
/// impossible branch from one that is merely tiny.
class ImpossibleBranch : public Error {
public:
    explicit ImpossibleBranch(double raw_trace)
        : Error("outcome never occurs (raw trace " + std::to_string(raw_trace) + ")"),
          raw_trace_(raw_trace) {}

    double raw_trace() const noexcept { return raw_trace_; }

private:
    double raw_trace_;
};

/// Malformed input document (state, operator, subspace or protocol file).
class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace distill
