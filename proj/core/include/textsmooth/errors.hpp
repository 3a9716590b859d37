#pragma once

#include <stdexcept>
#include <string>

namespace textsmooth {

// Shape and dimension contract violations (matmul mismatch, bad axis, ...).
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numeric-domain violations: non-finite inputs, non-stochastic rows.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: backward on a non-scalar, mask token in smoothing input, ...
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed input files: dataset TSV, checkpoint, smoothed cache.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration (reported before any compute starts).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace textsmooth
