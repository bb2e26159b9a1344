#pragma once

#include <stdexcept>
#include <string>

namespace uncattr {

// Bad user-supplied arguments / config (CLI exit code 2).
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data: missing columns, non-numeric cells, degenerate features.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: divergence, singular systems, non-finite propagation.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A filter/selection stage produced an empty result (CLI exit code 3).
struct EmptySelectionError : std::runtime_error {
    explicit EmptySelectionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uncattr
