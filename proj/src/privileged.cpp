#include "evgraph/errors.hpp"
#include "evgraph/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evgraph {

namespace {

std::vector<Index> top_degree(const Graph& g, Index size) {
    std::vector<Index> order(g.num_nodes());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return g.degree(a) > g.degree(b); });
    order.resize(size);
    return order;
}

/// L = D - A on the symmetrized unweighted support of S.
Matrix variation_operator(const Graph& g) {
    const Index n = g.num_nodes();
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j : g.neighbors(i)) a(i, j) = a(j, i) = 1.0;
    Matrix l = -a;
    for (Index i = 0; i < n; ++i) l(i, i) = a.row(i).sum();
    return l;
}

std::vector<Index> spectral_proxy_greedy(const Graph& g, Index size, std::uint64_t seed,
                                         const SpectralProxyOptions& opts) {
    const Index n = g.num_nodes();
    const Matrix l = variation_operator(g);
    Matrix lk = Matrix::Identity(n, n);
    for (int k = 0; k < opts.proxy_order; ++k) lk = l * lk;
    const Matrix proxy = lk.transpose() * lk;

    Rng rng(seed);
    std::vector<char> selected(n, 0);
    std::vector<Index> chosen;
    while (static_cast<Index>(chosen.size()) < size) {
        std::vector<Index> rest;
        for (Index i = 0; i < n; ++i)
            if (!selected[i]) rest.push_back(i);
        const Index m = static_cast<Index>(rest.size());
        Matrix sub(m, m);
        for (Index r = 0; r < m; ++r)
            for (Index c = 0; c < m; ++c) sub(r, c) = proxy(rest[r], rest[c]);
        // Smallest eigenpair of `sub` by power iteration on shift*I - sub, where the
        // Gershgorin bound keeps the shifted operator positive semidefinite.
        double shift = 0.0;
        for (Index r = 0; r < m; ++r) shift = std::max(shift, sub.row(r).cwiseAbs().sum());
        Vector psi(m);
        for (Index r = 0; r < m; ++r) psi(r) = uniform(rng, -1.0, 1.0);
        psi.normalize();
        for (int it = 0; it < opts.power_iterations; ++it) {
            Vector next = shift * psi - sub * psi;
            const double norm = next.norm();
            if (norm == 0.0) break;
            next /= norm;
            const double change = (next - psi).norm();
            psi = std::move(next);
            if (change < opts.tolerance) break;
        }
        Index best = 0;
        for (Index r = 1; r < m; ++r)
            if (psi(r) * psi(r) > psi(best) * psi(best)) best = r;
        selected[rest[best]] = 1;
        chosen.push_back(rest[best]);
    }
    return chosen;
}

} // namespace

PrivilegedSet select_privileged(const Graph& g, SelectionStrategy strategy, Index size,
                                std::uint64_t seed, const SpectralProxyOptions& opts) {
    if (size < 1 || size > g.num_nodes())
        throw InvalidArgument("select_privileged: size " + std::to_string(size) +
                              " outside [1, " + std::to_string(g.num_nodes()) + "]");
    PrivilegedSet out;
    out.nodes = strategy == SelectionStrategy::max_degree ? top_degree(g, size)
                                                          : spectral_proxy_greedy(g, size, seed, opts);
    std::sort(out.nodes.begin(), out.nodes.end());
    std::vector<Index> owner;
    hop_distances(g, out.nodes, &owner);
    for (Index& o : owner)
        if (o < 0) o = 0;
    out.assignment = std::move(owner);
    return out;
}

SelectionStrategy parse_selection_strategy(std::string_view name) {
    if (name == "max-degree") return SelectionStrategy::max_degree;
    if (name == "spectral-proxies") return SelectionStrategy::spectral_proxies;
    throw InvalidArgument("unknown selection strategy '" + std::string(name) + "'");
}

std::string_view to_string(SelectionStrategy s) {
    return s == SelectionStrategy::max_degree ? "max-degree" : "spectral-proxies";
}

} // namespace evgraph
