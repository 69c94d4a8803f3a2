#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phonon_uq {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by fits that cannot determine all coefficients from the data.
struct UnderdeterminedError : std::runtime_error {
    UnderdeterminedError(std::size_t samples, std::size_t required)
        : std::runtime_error("underdetermined fit: " + std::to_string(samples) +
                             " samples for " + std::to_string(required) +
                             " coefficients (need at least " + std::to_string(required) + ")"),
          samples(samples), required(required) {}
    std::size_t samples;
    std::size_t required;
};

struct ConditioningError : std::runtime_error {
    ConditioningError(double condition)
        : std::runtime_error("rank-deficient design matrix, condition estimate " +
                             std::to_string(condition)),
          condition(condition) {}
    double condition;
};

struct ConstructionError : std::runtime_error {
    ConstructionError(const std::string& what, int degree_reached)
        : std::runtime_error(what + " (degree reached: " + std::to_string(degree_reached) + ")"),
          degree_reached(degree_reached) {}
    int degree_reached;
};

struct OversizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace phonon_uq
