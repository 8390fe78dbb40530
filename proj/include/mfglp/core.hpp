#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfglp {

using numvec = std::vector<double>;
using std::size_t;

/// Raised when a grid, problem description, or configuration violates its contract.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when inputs to an operation have inconsistent shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numeric routine cannot honor its postconditions
/// (solver breakdown, infeasible candidate, zero converged runs, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operation is called in a state it does not accept
/// (e.g. extracting measures from a non-optimal solution).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace mfglp
