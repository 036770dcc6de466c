#pragma once

#include <stdexcept>
#include <string>

namespace geopep {

/// Input files or records that cannot be interpreted (bad PDB line, bad CSV row).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Well-formed input that violates a documented constraint (probability out of
/// range, duplicate key, coverage gap).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// API misuse: shape mismatches, stale tapes, violated preconditions.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

/// Numerical failure during training or evaluation (NaN loss, divergence).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace geopep
