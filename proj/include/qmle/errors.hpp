#pragma once

#include <stdexcept>
#include <string>

namespace qmle {

/// Dimension mismatches, out-of-bounds parameters, malformed inputs.
struct ContractError : std::invalid_argument {
    explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values, failed factorizations, overflow during recursion.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// det H fell below the declared floor (the lower-bound assumption on the
/// conditional variance fails at this parameter/history).
struct A2ViolationError : NumericError {
    A2ViolationError(const std::string& what, long t = -1) : NumericError(what), t(t) {}
    long t;  // observation index where it happened, -1 if not path-based
};

/// A declared Lipschitz coefficient sum diverges (non-summable sequence,
/// feedback polynomial with unit root, explosive expansion).
struct DivergenceError : NumericError {
    explicit DivergenceError(const std::string& what) : NumericError(what) {}
};

/// Stationarity-region predicate failed where it is a hard precondition.
struct RegionError : std::runtime_error {
    explicit RegionError(const std::string& what) : std::runtime_error(what) {}
};

/// Every optimizer start failed outright (no valid objective evaluation).
struct UnfittableError : std::runtime_error {
    explicit UnfittableError(const std::string& what) : std::runtime_error(what) {}
};

/// The estimated information matrix is singular or numerically so (the
/// derivative linear-independence condition fails empirically).
struct VarViolationError : NumericError {
    explicit VarViolationError(const std::string& what) : NumericError(what) {}
};

}  // namespace qmle
