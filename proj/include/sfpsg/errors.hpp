#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sfpsg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed files, bad JSON, missing keys, ragged arrays. CLI exit code 2.
struct ParseError : Error {
    using Error::Error;
};

// Domain-level failure: invalid game, infeasible generation, unmet threshold.
// CLI exit code 1.
struct DomainError : Error {
    using Error::Error;
};

// Tensor/strategy dimensions disagree with the action space.
struct ShapeError : DomainError {
    using DomainError::DomainError;
};

// Payoff input contains NaN or infinity.
struct NonFiniteError : DomainError {
    using DomainError::DomainError;
};

struct NoConvergenceError : DomainError {
    NoConvergenceError(double residual_, std::int64_t iterations_)
        : DomainError("fixed-point iteration did not converge: residual " +
                      std::to_string(residual_) + " after " +
                      std::to_string(iterations_) + " iterations"),
          residual(residual_),
          iterations(iterations_) {}
    double residual;
    std::int64_t iterations;
};

struct InfeasibleError : DomainError {
    explicit InfeasibleError(int attempts_)
        : DomainError("could not generate a connected game in " +
                      std::to_string(attempts_) + " attempts"),
          attempts(attempts_) {}
    int attempts;
};

struct IndexMismatchError : DomainError {
    using DomainError::DomainError;
};

// Backward induction produced a Q-row that is not a controller-action shift
// of the stage payoffs; indicates a broken game model.
struct EquivalenceViolationError : DomainError {
    EquivalenceViolationError(int stage_, int state_, double residual_)
        : DomainError("strategic-equivalence decomposition failed at stage " +
                      std::to_string(stage_) + ", state " + std::to_string(state_) +
                      ": residual " + std::to_string(residual_)),
          stage(stage_),
          state(state_),
          residual(residual_) {}
    int stage;
    int state;
    double residual;
};

}  // namespace sfpsg
