#pragma once

#include <stdexcept>
#include <string>

namespace evgraph {

/// Bad shapes, out-of-range hyperparameters, malformed inputs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The graph is valid but the requested operation does not support it
/// (e.g. spectral operations on a non-symmetric shift).
class UnsupportedGraph : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed: non-convergence, non-finite values.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// An experiment could not be carried out (e.g. no connected graph sampled).
class ExperimentFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace evgraph
