#pragma once

#include "evgraph/graph.hpp"
#include "evgraph/random.hpp"
#include "evgraph/spectrum.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace evgraph {

// ---------------------------------------------------------------------------
// Parameter containers. Learnable coefficients are plain values; structural data
// that a whole filter bank shares (sparsity patterns, kernels, bases, node sets)
// sits behind shared_ptr<const>.
// ---------------------------------------------------------------------------

/// y = sum_{k=0}^K taps[k] S^k x.
struct PolyParams {
    std::vector<double> taps;

    Index order() const { return static_cast<Index>(taps.size()) - 1; }
};

/// y = sum_{k=1}^K Phi^(k) ... Phi^(1) x with every Phi^(k) on one shared pattern
/// (the support of S + I, or of S alone without self-loops).
struct EVParams {
    std::vector<CsrMatrix> coeffs;
    bool use_self_loops = true;

    Index order() const { return static_cast<Index>(coeffs.size()); }

    /// Zero coefficients on the graph's support.
    static EVParams zeros(const Graph& g, Index order, bool use_self_loops = true);
};

/// y = U diag(kernel * weights) U^T x.
struct SpectralParams {
    std::shared_ptr<const Matrix> kernel; ///< N x b, fixed
    Vector weights;                       ///< b, learnable

    Index num_knots() const { return weights.size(); }
};

/// Privileged node set together with the map from every node to one of them.
struct PrivilegedSet {
    std::vector<Index> nodes;      ///< sorted, distinct
    std::vector<Index> assignment; ///< length N; position in `nodes`

    Index size() const { return static_cast<Index>(nodes.size()); }
    void validate(Index num_nodes) const;
};

enum class SelectionStrategy { max_degree, spectral_proxies };

/// y = sum_{k=0}^K diag(C_B taps.row(k)) S^k x.
struct NVParams {
    std::shared_ptr<const PrivilegedSet> privileged;
    Matrix taps; ///< (K+1) x |B|

    Index order() const { return taps.rows() - 1; }
};

/// y = sum_{k=0}^K (E_k ... E_1 D_0 + g_k S^k) x, where D_0 is diagonal on the
/// privileged nodes and every E_k lives on rows i in B, columns N_i + {i}.
struct HEVParams {
    std::shared_ptr<const PrivilegedSet> privileged;
    std::vector<double> diag0;     ///< one entry per privileged node
    std::vector<CsrMatrix> edges;  ///< E_1..E_K, one shared pattern
    std::vector<double> global_taps; ///< g_0..g_K

    Index order() const { return static_cast<Index>(global_taps.size()) - 1; }
    /// max_{i in B} |N_i|, computed from the edge pattern.
    Index max_privileged_degree() const;

    static HEVParams zeros(const Graph& g, std::shared_ptr<const PrivilegedSet> privileged,
                           Index order);
};

/// Orthonormal basis of the eigenvalue vectors lambda for which U diag(lambda) U^T
/// vanishes on every zero position of S + I.
struct SpectralEVBasis {
    Matrix basis; ///< N x r
    std::vector<std::pair<Index, Index>> zero_index_set;

    Index rank() const { return basis.cols(); }
};

/// y = U (sum_{k=1}^K prod_{j<=k} diag(basis mu_j)) U^T x.
struct SpectralEVParams {
    std::shared_ptr<const SpectralEVBasis> basis;
    Matrix mu; ///< rank x K, column k-1 is mu^(k)

    Index order() const { return mu.cols(); }
};

// ---------------------------------------------------------------------------
// Forward operators
// ---------------------------------------------------------------------------

GraphSignal poly_forward(const PolyParams& p, const Graph& g, const GraphSignal& x);
GraphSignal ev_forward(const EVParams& p, const GraphSignal& x);
GraphSignal spectral_forward(const SpectralParams& p, const Spectrum& sp, const GraphSignal& x);
GraphSignal nv_forward(const NVParams& p, const Graph& g, const GraphSignal& x);
GraphSignal hev_forward(const HEVParams& p, const Graph& g, const GraphSignal& x);
GraphSignal spectral_ev_forward(const std::vector<Vector>& mu, const SpectralEVBasis& basis,
                                const Spectrum& sp, const GraphSignal& x);

/// Edge-variant coefficients reproducing a polynomial filter.
///
/// phi_0 == 0: Phi^(1) = phi_1 S and Phi^(k) = (phi_k / phi_{k-1}) S, order K.
/// K == 1:     Phi^(1) = phi_0 I + phi_1 S.
/// otherwise:  Phi^(1) = phi_0 I and Phi^(k+1) = (phi_k / phi_{k-1}) S, order K + 1.
/// A ratio with phi_{k-1} == 0 and phi_k != 0 has no solution; InvalidArgument names k.
EVParams ev_from_poly(const PolyParams& p, const Graph& g);

/// Natural cubic spline interpolation basis over num_knots uniformly spaced knots on
/// [min, max] of the eigenvalues: column j is the natural spline through e_j,
/// evaluated at every eigenvalue. Rows sum to one.
Matrix cubic_spline_kernel(const Vector& eigenvalues, Index num_knots);

/// Null space of C_I (U * U) (Khatri-Rao), singular values <= 1e-9 sigma_max are zero.
SpectralEVBasis spectral_ev_basis(const Spectrum& sp, const Graph& g);

struct SpectralProxyOptions {
    int proxy_order = 2;
    int power_iterations = 50;
    double tolerance = 1e-6;
};

/// max_degree: the `size` highest |N_i| nodes, ties to the lowest index.
/// spectral_proxies: greedy sampling-set selection driven by the smallest eigenpair of
/// the restricted proxy operator (L^T)^k L^k, L = D - |A| on the unweighted support.
/// Non-privileged nodes are assigned to the hop-nearest privileged node (ties and
/// unreachable nodes go to the lowest index).
PrivilegedSet select_privileged(const Graph& g, SelectionStrategy strategy, Index size,
                                std::uint64_t seed, const SpectralProxyOptions& opts = {});

SelectionStrategy parse_selection_strategy(std::string_view name);
std::string_view to_string(SelectionStrategy s);

// ---------------------------------------------------------------------------
// Generic filter interface used by the layer machinery
// ---------------------------------------------------------------------------

enum class FilterFamily { polynomial, spectral, node_variant, edge_variant, hybrid_ev, spectral_ev };

FilterFamily parse_filter_family(std::string_view name);
std::string_view to_string(FilterFamily f);

using FilterParams =
    std::variant<PolyParams, SpectralParams, NVParams, EVParams, HEVParams, SpectralEVParams>;

FilterFamily family_of(const FilterParams& p);

/// The graph and, for spectral families, its eigendecomposition.
struct FilterContext {
    const Graph* graph = nullptr;
    const Spectrum* spectrum = nullptr;
};

/// Forward intermediate states kept for the backward pass.
struct FilterTape {
    std::vector<Matrix> states;
};

GraphSignal filter_forward(const FilterParams& p, const FilterContext& ctx, const GraphSignal& x,
                           FilterTape* tape = nullptr);

/// Accumulates d<upstream, y>/d(params) into `param_grad` (same family and shape as p)
/// and, when `input_grad` is non-null, d<upstream, y>/dx into *input_grad.
void filter_backward(const FilterParams& p, const FilterContext& ctx, const GraphSignal& x,
                     const FilterTape& tape, const GraphSignal& upstream, FilterParams& param_grad,
                     GraphSignal* input_grad);

struct FilterGradients {
    FilterParams params;
    GraphSignal input;
};

/// Convenience form: recomputes the tape and returns fresh gradients.
FilterGradients filter_backward(const FilterParams& p, const FilterContext& ctx,
                                const GraphSignal& x, const GraphSignal& upstream);

/// Same structure, all learnable coefficients zero.
FilterParams zeros_like(const FilterParams& p);

/// Views over every learnable scalar, in a fixed order.
std::vector<std::span<double>> coefficient_blocks(FilterParams& p);
std::vector<std::span<const double>> coefficient_blocks(const FilterParams& p);

/// Learnable scalars of one filter.
Index param_count(const FilterParams& p);
/// Learnable scalars of an F_in -> F_out bank of filters shaped like p.
Index param_count(const FilterParams& p, Index num_in_features, Index num_out_features);

/// Dense H(S) with H(S) x == filter_forward(p, ctx, x).
Matrix dense_operator(const FilterParams& p, const FilterContext& ctx);

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Hyperparameters for building a filter of a given family on a given graph.
struct FilterSpec {
    FilterFamily family = FilterFamily::polynomial;
    Index order = 1;        ///< K
    Index num_knots = 5;    ///< b (spectral)
    bool use_self_loops = true;
    std::shared_ptr<const PrivilegedSet> privileged;     ///< NV, HEV
    std::shared_ptr<const Matrix> kernel;                ///< spectral
    std::shared_ptr<const SpectralEVBasis> ev_basis;     ///< spectral-EV
};

/// Coefficients drawn iid uniform on [-1/sqrt(fan), 1/sqrt(fan)], fan being the number
/// of scalars feeding one output node feature (times num_in_features).
FilterParams random_filter(const FilterSpec& spec, const FilterContext& ctx,
                           Index num_in_features, Rng& rng);

} // namespace evgraph
