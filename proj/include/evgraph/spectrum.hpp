#pragma once

#include "evgraph/graph.hpp"

namespace evgraph {

/// Eigendecomposition S = U diag(eigenvalues) U^T of a symmetric shift.
struct Spectrum {
    Vector eigenvalues;  ///< ascending
    Matrix eigenvectors; ///< columns are the graph modes

    Index size() const { return eigenvalues.size(); }
};

struct JacobiOptions {
    int max_sweeps = 100;
    /// Stop once the off-diagonal Frobenius norm falls below tol * ||A||_F.
    double tolerance = 1e-15;
};

/// Cyclic Jacobi eigensolver for a dense symmetric matrix. Eigenvalues come out
/// ascending; equal eigenvalues keep the order in which the sweep left them.
/// Throws NumericFailure (carrying the off-diagonal residual) on non-convergence.
Spectrum symmetric_eigen(const Matrix& a, const JacobiOptions& opts = {});

/// Throws UnsupportedGraph when S is not symmetric to 1e-12.
Spectrum eigendecompose(const Graph& g, const JacobiOptions& opts = {});

/// U^T x.
GraphSignal gft(const Spectrum& sp, const GraphSignal& x);
/// U x_hat.
GraphSignal igft(const Spectrum& sp, const GraphSignal& x_hat);

} // namespace evgraph
