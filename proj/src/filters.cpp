#include "evgraph/filters.hpp"

#include "evgraph/errors.hpp"

#include <algorithm>
#include <cmath>

namespace evgraph {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_rows(const GraphSignal& x, Index n, const char* who) {
    if (x.rows() != n)
        throw InvalidArgument(std::string(who) + ": signal has " + std::to_string(x.rows()) +
                              " rows, expected " + std::to_string(n));
}

const Graph& require_graph(const FilterContext& ctx, const char* who) {
    if (!ctx.graph) throw InvalidArgument(std::string(who) + ": no graph in context");
    return *ctx.graph;
}

const Spectrum& require_spectrum(const FilterContext& ctx, const char* who) {
    if (!ctx.spectrum)
        throw InvalidArgument(std::string(who) + ": spectral family needs a Spectrum");
    return *ctx.spectrum;
}

void check_shared_pattern(const std::vector<CsrMatrix>& mats, const char* who) {
    if (mats.empty()) return;
    const auto& first = mats.front().pattern;
    if (!first) throw InvalidArgument(std::string(who) + ": null pattern");
    for (std::size_t k = 1; k < mats.size(); ++k) {
        const auto& p = mats[k].pattern;
        if (!p || (p != first && !(*p == *first)))
            throw InvalidArgument(std::string(who) + ": coefficient matrix " +
                                  std::to_string(k + 1) + " has a different support");
    }
    for (const auto& m : mats)
        if (static_cast<Index>(m.values.size()) != first->nnz())
            throw InvalidArgument(std::string(who) + ": value count does not match support");
}

// ---- polynomial -----------------------------------------------------------

void powers(const Graph& g, const GraphSignal& x, Index order, std::vector<Matrix>& w) {
    w.resize(order + 1);
    w[0] = x;
    for (Index k = 1; k <= order; ++k) spmm(g.shift(), w[k - 1], w[k]);
}

GraphSignal poly_impl(const PolyParams& p, const Graph& g, const GraphSignal& x, FilterTape* tape) {
    if (p.taps.empty()) throw InvalidArgument("poly_forward: no taps");
    require_rows(x, g.num_nodes(), "poly_forward");
    std::vector<Matrix> local;
    auto& w = tape ? tape->states : local;
    powers(g, x, p.order(), w);
    GraphSignal y = p.taps[0] * w[0];
    for (Index k = 1; k <= p.order(); ++k) y += p.taps[k] * w[k];
    return y;
}

void poly_backward(const PolyParams& p, const Graph& g, const FilterTape& tape,
                   const GraphSignal& up, PolyParams& grad, GraphSignal* dx) {
    const Index K = p.order();
    for (Index k = 0; k <= K; ++k) grad.taps[k] += up.cwiseProduct(tape.states[k]).sum();
    if (!dx) return;
    Matrix acc = p.taps[K] * up;
    for (Index k = K - 1; k >= 0; --k) {
        Matrix next = p.taps[k] * up;
        spmm_transpose_add(g.shift(), acc, next);
        acc = std::move(next);
    }
    *dx += acc;
}

// ---- edge-variant ---------------------------------------------------------

GraphSignal ev_impl(const EVParams& p, const GraphSignal& x, FilterTape* tape) {
    if (p.coeffs.empty()) throw InvalidArgument("ev_forward: order must be at least 1");
    check_shared_pattern(p.coeffs, "ev_forward");
    require_rows(x, p.coeffs.front().cols(), "ev_forward");
    std::vector<Matrix> local;
    auto& w = tape ? tape->states : local;
    const Index K = p.order();
    w.resize(K + 1);
    w[0] = x;
    GraphSignal y = GraphSignal::Zero(p.coeffs.front().rows(), x.cols());
    for (Index k = 1; k <= K; ++k) {
        spmm(p.coeffs[k - 1], w[k - 1], w[k]);
        y += w[k];
    }
    return y;
}

void ev_backward(const EVParams& p, const FilterTape& tape, const GraphSignal& up, EVParams& grad,
                 GraphSignal* dx) {
    const Index K = p.order();
    Matrix adj = up;
    for (Index k = K; k >= 1; --k) {
        accumulate_outer_on_pattern(*p.coeffs[k - 1].pattern, adj, tape.states[k - 1],
                                    grad.coeffs[k - 1].values);
        if (k > 1) {
            Matrix next = up;
            spmm_transpose_add(p.coeffs[k - 1], adj, next);
            adj = std::move(next);
        } else if (dx) {
            spmm_transpose_add(p.coeffs[0], adj, *dx);
        }
    }
}

// ---- spectral -------------------------------------------------------------

void check_spectral(const SpectralParams& p, const Spectrum& sp) {
    if (!p.kernel) throw InvalidArgument("spectral_forward: no kernel");
    if (p.kernel->rows() != sp.size() || p.kernel->cols() != p.weights.size())
        throw InvalidArgument("spectral_forward: kernel is " + std::to_string(p.kernel->rows()) +
                              "x" + std::to_string(p.kernel->cols()) + ", expected " +
                              std::to_string(sp.size()) + "x" + std::to_string(p.weights.size()));
}

GraphSignal spectral_impl(const SpectralParams& p, const Spectrum& sp, const GraphSignal& x,
                          FilterTape* tape) {
    check_spectral(p, sp);
    require_rows(x, sp.size(), "spectral_forward");
    Matrix xh = sp.eigenvectors.transpose() * x;
    const Vector h = (*p.kernel) * p.weights;
    GraphSignal y = sp.eigenvectors * (h.asDiagonal() * xh);
    if (tape) tape->states = {std::move(xh)};
    return y;
}

void spectral_backward(const SpectralParams& p, const Spectrum& sp, const FilterTape& tape,
                       const GraphSignal& up, SpectralParams& grad, GraphSignal* dx) {
    const Matrix gh = sp.eigenvectors.transpose() * up;
    const Vector dh = gh.cwiseProduct(tape.states[0]).rowwise().sum();
    grad.weights += p.kernel->transpose() * dh;
    if (dx) {
        const Vector h = (*p.kernel) * p.weights;
        *dx += sp.eigenvectors * (h.asDiagonal() * gh);
    }
}

// ---- node-variant ---------------------------------------------------------

void check_nv(const NVParams& p, Index n) {
    if (!p.privileged) throw InvalidArgument("nv_forward: no privileged set");
    p.privileged->validate(n);
    if (p.taps.rows() < 1 || p.taps.cols() != p.privileged->size())
        throw InvalidArgument("nv_forward: taps must be (K+1) x |B|");
}

Vector node_gains(const NVParams& p, Index k) {
    const auto& a = p.privileged->assignment;
    Vector d(static_cast<Index>(a.size()));
    for (Index i = 0; i < d.size(); ++i) d(i) = p.taps(k, a[i]);
    return d;
}

GraphSignal nv_impl(const NVParams& p, const Graph& g, const GraphSignal& x, FilterTape* tape) {
    check_nv(p, g.num_nodes());
    require_rows(x, g.num_nodes(), "nv_forward");
    std::vector<Matrix> local;
    auto& w = tape ? tape->states : local;
    powers(g, x, p.order(), w);
    GraphSignal y = node_gains(p, 0).asDiagonal() * w[0];
    for (Index k = 1; k <= p.order(); ++k) y += node_gains(p, k).asDiagonal() * w[k];
    return y;
}

void nv_backward(const NVParams& p, const Graph& g, const FilterTape& tape, const GraphSignal& up,
                 NVParams& grad, GraphSignal* dx) {
    const Index K = p.order();
    const auto& a = p.privileged->assignment;
    for (Index k = 0; k <= K; ++k) {
        const Vector per_node = up.cwiseProduct(tape.states[k]).rowwise().sum();
        for (Index i = 0; i < per_node.size(); ++i) grad.taps(k, a[i]) += per_node(i);
    }
    if (!dx) return;
    Matrix acc = node_gains(p, K).asDiagonal() * up;
    for (Index k = K - 1; k >= 0; --k) {
        Matrix next = node_gains(p, k).asDiagonal() * up;
        spmm_transpose_add(g.shift(), acc, next);
        acc = std::move(next);
    }
    *dx += acc;
}

// ---- hybrid edge-variant --------------------------------------------------

void check_hev(const HEVParams& p, const Graph& g) {
    if (!p.privileged) throw InvalidArgument("hev_forward: no privileged set");
    const auto& b = *p.privileged;
    b.validate(g.num_nodes());
    if (p.global_taps.empty()) throw InvalidArgument("hev_forward: no global taps");
    if (static_cast<Index>(p.edges.size()) != p.order())
        throw InvalidArgument("hev_forward: need K edge matrices for K+1 global taps");
    if (static_cast<Index>(p.diag0.size()) != b.size())
        throw InvalidArgument("hev_forward: diag0 must have one entry per privileged node");
    check_shared_pattern(p.edges, "hev_forward");
    if (p.edges.empty()) return;
    const auto& pat = *p.edges.front().pattern;
    if (pat.rows != g.num_nodes() || pat.cols != g.num_nodes())
        throw InvalidArgument("hev_forward: edge matrices have the wrong shape");
    std::vector<char> is_priv(g.num_nodes(), 0);
    for (Index v : b.nodes) is_priv[v] = 1;
    const auto& support = *g.support_with_diag();
    for (Index i = 0; i < pat.rows; ++i) {
        if (pat.row_nnz(i) > 0 && !is_priv[i])
            throw InvalidArgument("hev_forward: edge coefficients on non-privileged row " +
                                  std::to_string(i + 1));
        for (Index q = pat.row_ptr[i]; q < pat.row_ptr[i + 1]; ++q)
            if (!support.contains(i, pat.col_idx[q]))
                throw InvalidArgument("hev_forward: coefficient (" + std::to_string(i + 1) + ", " +
                                      std::to_string(pat.col_idx[q] + 1) +
                                      ") outside N_i + {i}");
    }
}

// tape layout: [w_0..w_K] (powers of S), then [v_0..v_K] (privileged chain)
GraphSignal hev_impl(const HEVParams& p, const Graph& g, const GraphSignal& x, FilterTape* tape) {
    check_hev(p, g);
    require_rows(x, g.num_nodes(), "hev_forward");
    const Index K = p.order();
    std::vector<Matrix> local;
    auto& st = tape ? tape->states : local;
    powers(g, x, K, st);
    st.resize(2 * (K + 1));
    Matrix& v0 = st[K + 1];
    v0 = Matrix::Zero(x.rows(), x.cols());
    const auto& nodes = p.privileged->nodes;
    for (std::size_t b = 0; b < nodes.size(); ++b) v0.row(nodes[b]) = p.diag0[b] * x.row(nodes[b]);
    GraphSignal y = p.global_taps[0] * st[0] + v0;
    for (Index k = 1; k <= K; ++k) {
        spmm(p.edges[k - 1], st[K + k], st[K + 1 + k]);
        y += p.global_taps[k] * st[k] + st[K + 1 + k];
    }
    return y;
}

void hev_backward(const HEVParams& p, const Graph& g, const GraphSignal& x, const FilterTape& tape,
                  const GraphSignal& up, HEVParams& grad, GraphSignal* dx) {
    const Index K = p.order();
    for (Index k = 0; k <= K; ++k) grad.global_taps[k] += up.cwiseProduct(tape.states[k]).sum();
    Matrix adj = up;
    for (Index k = K; k >= 1; --k) {
        accumulate_outer_on_pattern(*p.edges[k - 1].pattern, adj, tape.states[K + k],
                                    grad.edges[k - 1].values);
        Matrix next = up;
        spmm_transpose_add(p.edges[k - 1], adj, next);
        adj = std::move(next);
    }
    const auto& nodes = p.privileged->nodes;
    for (std::size_t b = 0; b < nodes.size(); ++b)
        grad.diag0[b] += adj.row(nodes[b]).dot(x.row(nodes[b]));
    if (!dx) return;
    Matrix acc = p.global_taps[K] * up;
    for (Index k = K - 1; k >= 0; --k) {
        Matrix next = p.global_taps[k] * up;
        spmm_transpose_add(g.shift(), acc, next);
        acc = std::move(next);
    }
    for (std::size_t b = 0; b < nodes.size(); ++b) acc.row(nodes[b]) += p.diag0[b] * adj.row(nodes[b]);
    *dx += acc;
}

// ---- spectral edge-variant ------------------------------------------------

void check_sev(const SpectralEVBasis& basis, const Matrix& mu, const Spectrum& sp) {
    if (basis.basis.rows() != sp.size())
        throw InvalidArgument("spectral_ev_forward: basis has " +
                              std::to_string(basis.basis.rows()) + " rows, spectrum " +
                              std::to_string(sp.size()));
    if (mu.rows() != basis.rank())
        throw InvalidArgument("spectral_ev_forward: coefficient length " +
                              std::to_string(mu.rows()) + " differs from basis rank " +
                              std::to_string(basis.rank()));
    if (mu.cols() < 1) throw InvalidArgument("spectral_ev_forward: order must be at least 1");
}

Vector sev_response(const SpectralEVBasis& basis, const Matrix& mu) {
    const Matrix lambdas = basis.basis * mu; // N x K
    Vector prefix = Vector::Ones(lambdas.rows());
    Vector h = Vector::Zero(lambdas.rows());
    for (Index k = 0; k < lambdas.cols(); ++k) {
        prefix = prefix.cwiseProduct(lambdas.col(k));
        h += prefix;
    }
    return h;
}

GraphSignal sev_impl(const SpectralEVParams& p, const Spectrum& sp, const GraphSignal& x,
                     FilterTape* tape) {
    if (!p.basis) throw InvalidArgument("spectral_ev_forward: no basis");
    check_sev(*p.basis, p.mu, sp);
    require_rows(x, sp.size(), "spectral_ev_forward");
    Matrix xh = sp.eigenvectors.transpose() * x;
    GraphSignal y = sp.eigenvectors * (sev_response(*p.basis, p.mu).asDiagonal() * xh);
    if (tape) tape->states = {std::move(xh)};
    return y;
}

void sev_backward(const SpectralEVParams& p, const Spectrum& sp, const FilterTape& tape,
                  const GraphSignal& up, SpectralEVParams& grad, GraphSignal* dx) {
    const Matrix lambdas = p.basis->basis * p.mu;
    const Index n = lambdas.rows(), K = lambdas.cols();
    const Matrix gh = sp.eigenvectors.transpose() * up;
    const Vector dh = gh.cwiseProduct(tape.states[0]).rowwise().sum();
    // prefix(k) = prod_{j<k} lambda_j ; suffix(k) = 1 + lambda_{k+1} (1 + lambda_{k+2} (...))
    Matrix prefix(n, K + 1), suffix(n, K);
    prefix.col(0).setOnes();
    for (Index k = 0; k < K; ++k) prefix.col(k + 1) = prefix.col(k).cwiseProduct(lambdas.col(k));
    suffix.col(K - 1).setOnes();
    for (Index k = K - 2; k >= 0; --k)
        suffix.col(k) = Vector::Ones(n) + lambdas.col(k + 1).cwiseProduct(suffix.col(k + 1));
    for (Index k = 0; k < K; ++k) {
        const Vector dl = dh.cwiseProduct(prefix.col(k)).cwiseProduct(suffix.col(k));
        grad.mu.col(k) += p.basis->basis.transpose() * dl;
    }
    if (dx) {
        const Vector h = prefix.rightCols(K).rowwise().sum();
        *dx += sp.eigenvectors * (h.asDiagonal() * gh);
    }
}

double symmetric_uniform(Rng& rng, double fan) {
    const double bound = 1.0 / std::sqrt(std::max(fan, 1.0));
    return uniform(rng, -bound, bound);
}

} // namespace

// ---------------------------------------------------------------------------

EVParams EVParams::zeros(const Graph& g, Index order, bool use_self_loops) {
    if (order < 1) throw InvalidArgument("EVParams: order must be at least 1");
    auto pat = use_self_loops ? g.support_with_diag() : g.support_edges();
    EVParams p;
    p.use_self_loops = use_self_loops;
    for (Index k = 0; k < order; ++k)
        p.coeffs.emplace_back(pat, std::vector<double>(pat->nnz(), 0.0));
    return p;
}

void PrivilegedSet::validate(Index num_nodes) const {
    if (nodes.empty()) throw InvalidArgument("privileged set is empty");
    for (std::size_t b = 0; b < nodes.size(); ++b) {
        if (nodes[b] < 0 || nodes[b] >= num_nodes)
            throw InvalidArgument("privileged node out of range");
        if (b > 0 && nodes[b] <= nodes[b - 1])
            throw InvalidArgument("privileged nodes must be sorted and distinct");
    }
    if (static_cast<Index>(assignment.size()) != num_nodes)
        throw InvalidArgument("privileged assignment must cover every node");
    for (Index a : assignment)
        if (a < 0 || a >= size())
            throw InvalidArgument("assignment references non-privileged index " +
                                  std::to_string(a));
    for (std::size_t b = 0; b < nodes.size(); ++b)
        if (assignment[nodes[b]] != static_cast<Index>(b))
            throw InvalidArgument("privileged node " + std::to_string(nodes[b] + 1) +
                                  " is not assigned to itself");
}

Index HEVParams::max_privileged_degree() const {
    if (edges.empty()) return 0;
    const auto& pat = *edges.front().pattern;
    Index m = 0;
    for (Index i = 0; i < pat.rows; ++i) {
        Index d = 0;
        for (Index q = pat.row_ptr[i]; q < pat.row_ptr[i + 1]; ++q)
            if (pat.col_idx[q] != i) ++d;
        m = std::max(m, d);
    }
    return m;
}

HEVParams HEVParams::zeros(const Graph& g, std::shared_ptr<const PrivilegedSet> privileged,
                           Index order) {
    if (order < 0) throw InvalidArgument("HEVParams: negative order");
    if (!privileged) throw InvalidArgument("HEVParams: no privileged set");
    privileged->validate(g.num_nodes());
    const auto& support = *g.support_with_diag();
    auto pat = std::make_shared<CsrPattern>();
    pat->rows = pat->cols = g.num_nodes();
    pat->row_ptr.assign(g.num_nodes() + 1, 0);
    std::vector<char> is_priv(g.num_nodes(), 0);
    for (Index v : privileged->nodes) is_priv[v] = 1;
    for (Index i = 0; i < g.num_nodes(); ++i) {
        if (is_priv[i])
            for (Index q = support.row_ptr[i]; q < support.row_ptr[i + 1]; ++q)
                pat->col_idx.push_back(support.col_idx[q]);
        pat->row_ptr[i + 1] = pat->nnz();
    }
    HEVParams p;
    p.privileged = std::move(privileged);
    p.diag0.assign(p.privileged->size(), 0.0);
    p.global_taps.assign(order + 1, 0.0);
    std::shared_ptr<const CsrPattern> shared = pat;
    for (Index k = 0; k < order; ++k)
        p.edges.emplace_back(shared, std::vector<double>(shared->nnz(), 0.0));
    return p;
}

GraphSignal poly_forward(const PolyParams& p, const Graph& g, const GraphSignal& x) {
    return poly_impl(p, g, x, nullptr);
}

GraphSignal ev_forward(const EVParams& p, const GraphSignal& x) { return ev_impl(p, x, nullptr); }

GraphSignal spectral_forward(const SpectralParams& p, const Spectrum& sp, const GraphSignal& x) {
    return spectral_impl(p, sp, x, nullptr);
}

GraphSignal nv_forward(const NVParams& p, const Graph& g, const GraphSignal& x) {
    return nv_impl(p, g, x, nullptr);
}

GraphSignal hev_forward(const HEVParams& p, const Graph& g, const GraphSignal& x) {
    return hev_impl(p, g, x, nullptr);
}

GraphSignal spectral_ev_forward(const std::vector<Vector>& mu, const SpectralEVBasis& basis,
                                const Spectrum& sp, const GraphSignal& x) {
    Matrix m(basis.rank(), static_cast<Index>(mu.size()));
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu[k].size() != basis.rank())
            throw InvalidArgument("spectral_ev_forward: mu^(" + std::to_string(k + 1) +
                                  ") has length " + std::to_string(mu[k].size()) +
                                  ", basis rank is " + std::to_string(basis.rank()));
        m.col(static_cast<Index>(k)) = mu[k];
    }
    check_sev(basis, m, sp);
    require_rows(x, sp.size(), "spectral_ev_forward");
    return sp.eigenvectors * (sev_response(basis, m).asDiagonal() * (sp.eigenvectors.transpose() * x));
}

EVParams ev_from_poly(const PolyParams& p, const Graph& g) {
    const Index K = p.order();
    if (K < 1) throw InvalidArgument("ev_from_poly: polynomial order must be at least 1");
    const auto& phi = p.taps;
    const auto pat = g.support_with_diag();
    const CsrMatrix& s = g.shift();

    auto diag_plus_shift = [&](double a, double b) {
        std::vector<double> v(pat->nnz(), 0.0);
        for (Index i = 0; i < pat->rows; ++i)
            for (Index q = pat->row_ptr[i]; q < pat->row_ptr[i + 1]; ++q) {
                const Index j = pat->col_idx[q];
                v[q] = b * s.at(i, j) + (i == j ? a : 0.0);
            }
        return CsrMatrix(pat, std::move(v));
    };
    auto ratio = [&](Index k) {
        if (phi[k - 1] == 0.0) {
            if (phi[k] != 0.0)
                throw InvalidArgument("ev_from_poly: tap " + std::to_string(k) +
                                      " is nonzero after a zero tap; no edge-variant "
                                      "factorization at k = " +
                                      std::to_string(k));
            return 0.0;
        }
        return phi[k] / phi[k - 1];
    };

    EVParams out;
    out.use_self_loops = true;
    if (phi[0] == 0.0) {
        out.coeffs.push_back(diag_plus_shift(0.0, phi[1]));
        for (Index k = 2; k <= K; ++k) out.coeffs.push_back(diag_plus_shift(0.0, ratio(k)));
    } else if (K == 1) {
        out.coeffs.push_back(diag_plus_shift(phi[0], phi[1]));
    } else {
        out.coeffs.push_back(diag_plus_shift(phi[0], 0.0));
        for (Index k = 1; k <= K; ++k) out.coeffs.push_back(diag_plus_shift(0.0, ratio(k)));
    }
    return out;
}

// ---------------------------------------------------------------------------

FilterFamily parse_filter_family(std::string_view name) {
    if (name == "polynomial") return FilterFamily::polynomial;
    if (name == "spectral") return FilterFamily::spectral;
    if (name == "node-variant") return FilterFamily::node_variant;
    if (name == "edge-variant") return FilterFamily::edge_variant;
    if (name == "hybrid-ev") return FilterFamily::hybrid_ev;
    if (name == "spectral-ev") return FilterFamily::spectral_ev;
    throw InvalidArgument("unknown filter family '" + std::string(name) + "'");
}

std::string_view to_string(FilterFamily f) {
    switch (f) {
    case FilterFamily::polynomial: return "polynomial";
    case FilterFamily::spectral: return "spectral";
    case FilterFamily::node_variant: return "node-variant";
    case FilterFamily::edge_variant: return "edge-variant";
    case FilterFamily::hybrid_ev: return "hybrid-ev";
    case FilterFamily::spectral_ev: return "spectral-ev";
    }
    return "?";
}

FilterFamily family_of(const FilterParams& p) {
    return std::visit(overloaded{
                          [](const PolyParams&) { return FilterFamily::polynomial; },
                          [](const SpectralParams&) { return FilterFamily::spectral; },
                          [](const NVParams&) { return FilterFamily::node_variant; },
                          [](const EVParams&) { return FilterFamily::edge_variant; },
                          [](const HEVParams&) { return FilterFamily::hybrid_ev; },
                          [](const SpectralEVParams&) { return FilterFamily::spectral_ev; },
                      },
                      p);
}

GraphSignal filter_forward(const FilterParams& p, const FilterContext& ctx, const GraphSignal& x,
                           FilterTape* tape) {
    return std::visit(
        overloaded{
            [&](const PolyParams& q) { return poly_impl(q, require_graph(ctx, "poly"), x, tape); },
            [&](const SpectralParams& q) {
                return spectral_impl(q, require_spectrum(ctx, "spectral"), x, tape);
            },
            [&](const NVParams& q) { return nv_impl(q, require_graph(ctx, "nv"), x, tape); },
            [&](const EVParams& q) { return ev_impl(q, x, tape); },
            [&](const HEVParams& q) { return hev_impl(q, require_graph(ctx, "hev"), x, tape); },
            [&](const SpectralEVParams& q) {
                return sev_impl(q, require_spectrum(ctx, "spectral-ev"), x, tape);
            },
        },
        p);
}

void filter_backward(const FilterParams& p, const FilterContext& ctx, const GraphSignal& x,
                     const FilterTape& tape, const GraphSignal& upstream, FilterParams& param_grad,
                     GraphSignal* input_grad) {
    if (p.index() != param_grad.index())
        throw InvalidArgument("filter_backward: gradient container has a different family");
    if (upstream.rows() != x.rows() || upstream.cols() != x.cols())
        throw InvalidArgument("filter_backward: upstream gradient shape differs from output");
    if (input_grad && (input_grad->rows() != x.rows() || input_grad->cols() != x.cols()))
        throw InvalidArgument("filter_backward: input gradient shape differs from input");
    std::visit(
        overloaded{
            [&](const PolyParams& q) {
                poly_backward(q, *ctx.graph, tape, upstream, std::get<PolyParams>(param_grad),
                              input_grad);
            },
            [&](const SpectralParams& q) {
                spectral_backward(q, *ctx.spectrum, tape, upstream,
                                  std::get<SpectralParams>(param_grad), input_grad);
            },
            [&](const NVParams& q) {
                nv_backward(q, *ctx.graph, tape, upstream, std::get<NVParams>(param_grad),
                            input_grad);
            },
            [&](const EVParams& q) {
                ev_backward(q, tape, upstream, std::get<EVParams>(param_grad), input_grad);
            },
            [&](const HEVParams& q) {
                hev_backward(q, *ctx.graph, x, tape, upstream, std::get<HEVParams>(param_grad),
                             input_grad);
            },
            [&](const SpectralEVParams& q) {
                sev_backward(q, *ctx.spectrum, tape, upstream,
                             std::get<SpectralEVParams>(param_grad), input_grad);
            },
        },
        p);
}

FilterGradients filter_backward(const FilterParams& p, const FilterContext& ctx,
                                const GraphSignal& x, const GraphSignal& upstream) {
    FilterTape tape;
    const GraphSignal y = filter_forward(p, ctx, x, &tape);
    if (upstream.rows() != y.rows() || upstream.cols() != y.cols())
        throw InvalidArgument("filter_backward: upstream gradient shape differs from output");
    FilterGradients out{zeros_like(p), GraphSignal::Zero(x.rows(), x.cols())};
    filter_backward(p, ctx, x, tape, upstream, out.params, &out.input);
    return out;
}

FilterParams zeros_like(const FilterParams& p) {
    FilterParams z = p;
    for (auto block : coefficient_blocks(z)) std::fill(block.begin(), block.end(), 0.0);
    return z;
}

std::vector<std::span<double>> coefficient_blocks(FilterParams& p) {
    std::vector<std::span<double>> out;
    std::visit(overloaded{
                   [&](PolyParams& q) { out.emplace_back(q.taps); },
                   [&](SpectralParams& q) {
                       out.emplace_back(q.weights.data(), static_cast<std::size_t>(q.weights.size()));
                   },
                   [&](NVParams& q) {
                       out.emplace_back(q.taps.data(), static_cast<std::size_t>(q.taps.size()));
                   },
                   [&](EVParams& q) {
                       for (auto& c : q.coeffs) out.emplace_back(c.values);
                   },
                   [&](HEVParams& q) {
                       out.emplace_back(q.diag0);
                       for (auto& c : q.edges) out.emplace_back(c.values);
                       out.emplace_back(q.global_taps);
                   },
                   [&](SpectralEVParams& q) {
                       out.emplace_back(q.mu.data(), static_cast<std::size_t>(q.mu.size()));
                   },
               },
               p);
    return out;
}

std::vector<std::span<const double>> coefficient_blocks(const FilterParams& p) {
    auto mutable_blocks = coefficient_blocks(const_cast<FilterParams&>(p));
    return {mutable_blocks.begin(), mutable_blocks.end()};
}

Index param_count(const FilterParams& p) {
    Index n = 0;
    for (auto b : coefficient_blocks(p)) n += static_cast<Index>(b.size());
    return n;
}

Index param_count(const FilterParams& p, Index num_in_features, Index num_out_features) {
    return param_count(p) * num_in_features * num_out_features;
}

Matrix dense_operator(const FilterParams& p, const FilterContext& ctx) {
    Index n = 0;
    if (ctx.graph)
        n = ctx.graph->num_nodes();
    else if (ctx.spectrum)
        n = ctx.spectrum->size();
    else if (const auto* ev = std::get_if<EVParams>(&p); ev && !ev->coeffs.empty())
        n = ev->coeffs.front().cols();
    if (n == 0) throw InvalidArgument("dense_operator: cannot infer the graph size");
    return filter_forward(p, ctx, Matrix::Identity(n, n));
}

FilterParams random_filter(const FilterSpec& spec, const FilterContext& ctx, Index num_in_features,
                           Rng& rng) {
    if (num_in_features < 1) throw InvalidArgument("random_filter: no input features");
    const double fin = static_cast<double>(num_in_features);
    const Index K = spec.order;
    switch (spec.family) {
    case FilterFamily::polynomial: {
        if (K < 0) throw InvalidArgument("polynomial: negative order");
        PolyParams p;
        for (Index k = 0; k <= K; ++k) p.taps.push_back(symmetric_uniform(rng, fin * (K + 1)));
        return p;
    }
    case FilterFamily::spectral: {
        if (!spec.kernel) throw InvalidArgument("spectral: no kernel");
        SpectralParams p;
        p.kernel = spec.kernel;
        const Index b = spec.kernel->cols();
        p.weights.resize(b);
        for (Index j = 0; j < b; ++j) p.weights(j) = symmetric_uniform(rng, fin * b);
        return p;
    }
    case FilterFamily::node_variant: {
        if (K < 0) throw InvalidArgument("node-variant: negative order");
        if (!spec.privileged) throw InvalidArgument("node-variant: no privileged set");
        NVParams p;
        p.privileged = spec.privileged;
        p.taps.resize(K + 1, spec.privileged->size());
        for (Index j = 0; j < p.taps.cols(); ++j)
            for (Index k = 0; k <= K; ++k) p.taps(k, j) = symmetric_uniform(rng, fin * (K + 1));
        return p;
    }
    case FilterFamily::edge_variant: {
        const Graph& g = require_graph(ctx, "edge-variant");
        EVParams p = EVParams::zeros(g, K, spec.use_self_loops);
        const auto& pat = *p.coeffs.front().pattern;
        for (auto& c : p.coeffs)
            for (Index i = 0; i < pat.rows; ++i)
                for (Index q = pat.row_ptr[i]; q < pat.row_ptr[i + 1]; ++q)
                    c.values[q] = symmetric_uniform(rng, fin * pat.row_nnz(i));
        return p;
    }
    case FilterFamily::hybrid_ev: {
        const Graph& g = require_graph(ctx, "hybrid-ev");
        HEVParams p = HEVParams::zeros(g, spec.privileged, K);
        const double fan =
            fin * static_cast<double>((K + 1) + 1 + K * (p.max_privileged_degree() + 1));
        for (auto& d : p.diag0) d = symmetric_uniform(rng, fan);
        for (auto& c : p.edges)
            for (auto& v : c.values) v = symmetric_uniform(rng, fan);
        for (auto& t : p.global_taps) t = symmetric_uniform(rng, fan);
        return p;
    }
    case FilterFamily::spectral_ev: {
        if (!spec.ev_basis) throw InvalidArgument("spectral-ev: no basis");
        if (K < 1) throw InvalidArgument("spectral-ev: order must be at least 1");
        SpectralEVParams p;
        p.basis = spec.ev_basis;
        p.mu.resize(spec.ev_basis->rank(), K);
        const double fan = fin * static_cast<double>(K * std::max<Index>(1, spec.ev_basis->rank()));
        for (Index k = 0; k < K; ++k)
            for (Index r = 0; r < p.mu.rows(); ++r) p.mu(r, k) = symmetric_uniform(rng, fan);
        return p;
    }
    }
    throw InvalidArgument("random_filter: unknown family");
}

} // namespace evgraph
