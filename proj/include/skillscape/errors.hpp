#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skillscape {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or invariant-violating configuration / schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Numerical domain errors raised by the model primitives (degenerate variance,
// singular prior, infeasible choice set, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> trajectory)
        : Error(what), trajectory_(std::move(trajectory)) {}

    // Map residual per iteration up to the failure.
    const std::vector<double>& trajectory() const { return trajectory_; }

private:
    std::vector<double> trajectory_;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

}  // namespace skillscape
