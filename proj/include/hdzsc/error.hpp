#pragma once

#include <stdexcept>
#include <string>

namespace hdzsc {

// Base error for all library failures. Parsers and loaders throw subclasses
// so callers can map them onto exit codes without string matching.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (files, matrices, labels).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Shape or dimension mismatch between operands.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Numerically degenerate input (zero-norm rows, non-finite gradients).
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace hdzsc
