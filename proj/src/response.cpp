#include "evgraph/response.hpp"

#include "evgraph/errors.hpp"
#include "evgraph/graph.hpp"

#include <sstream>

namespace evgraph {

SpectralResponse spectral_response(const FilterParams& p, const Graph& g, const Spectrum& sp) {
    if (g.directed()) throw UnsupportedGraph("spectral response needs an undirected graph");
    if (sp.eigenvalues.size() != g.num_nodes())
        throw InvalidArgument("spectral response: spectrum does not match the graph");
    const FilterContext ctx{&g, &sp};
    const Matrix h = dense_operator(p, ctx);
    const Matrix d = sp.eigenvectors.transpose() * h * sp.eigenvectors;
    SpectralResponse r;
    r.eigenvalues = sp.eigenvalues;
    r.response = d.diagonal();
    r.offdiag_energy = d.squaredNorm() - r.response.squaredNorm();
    if (r.offdiag_energy < 0.0) r.offdiag_energy = 0.0;
    r.diagonal = r.offdiag_energy <= diagonal_tolerance;
    return r;
}

SpectralResponse spectral_response(const FilterParams& p, const Graph& g) {
    if (g.directed()) throw UnsupportedGraph("spectral response needs an undirected graph");
    return spectral_response(p, g, eigendecompose(g));
}

std::string response_csv(const SpectralResponse& r, FilterFamily family) {
    std::ostringstream os;
    os << "# family=" << to_string(family) << " diagonal=" << (r.diagonal ? "true" : "false")
       << " offdiag_energy=" << format_double(r.offdiag_energy) << '\n'
       << "lambda,response\n";
    for (Index n = 0; n < r.eigenvalues.size(); ++n)
        os << format_double(r.eigenvalues(n)) << ',' << format_double(r.response(n)) << '\n';
    return os.str();
}

} // namespace evgraph
