#pragma once

#include "evgraph/filters.hpp"
#include "evgraph/spectrum.hpp"

#include <string>

namespace evgraph {

/// Frequency response of a filter on a symmetric graph: the diagonal of U^T H(S) U at
/// the ascending eigenvalues. For polynomial, spectral and spectral-EV filters this is
/// the transfer function h(lambda_n).
struct SpectralResponse {
    Vector eigenvalues;
    Vector response;
    double offdiag_energy = 0.0; ///< sum of squared off-diagonal entries of U^T H U
    bool diagonal = true;        ///< offdiag_energy <= diagonal_tolerance
};

inline constexpr double diagonal_tolerance = 1e-8;

/// Throws UnsupportedGraph for a directed graph and InvalidArgument when the filter's
/// structure does not fit the graph.
SpectralResponse spectral_response(const FilterParams& p, const Graph& g, const Spectrum& sp);
SpectralResponse spectral_response(const FilterParams& p, const Graph& g);

/// First line `# family=<name> diagonal=<true|false> offdiag_energy=<x>`, then the
/// header `lambda,response` and one row per eigenvalue.
std::string response_csv(const SpectralResponse& r, FilterFamily family);

} // namespace evgraph
