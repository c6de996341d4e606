#pragma once

#include "evgraph/sparse.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace evgraph {

/// Dense N x F matrix; column f is the f-th feature, row i lives on node i.
using GraphSignal = Matrix;

/// A graph together with its shift operator S.
///
/// Convention: a stored off-diagonal nonzero S(i, j) is the edge (j, i), i.e. node i
/// aggregates from its neighbor j. Stored diagonal entries are self-loops and do not
/// count as edges. Immutable after construction.
class Graph {
public:
    Graph(CsrMatrix shift, bool directed, std::optional<CsrMatrix> raw_weights = std::nullopt);

    static Graph from_triplets(Index num_nodes, std::vector<Triplet> entries, bool directed,
                               bool keep_raw_weights = true);

    Index num_nodes() const { return shift_.rows(); }
    /// Stored off-diagonal nonzeros (each ordered pair once).
    Index num_directed_edges() const { return num_edges_; }
    bool directed() const { return directed_; }

    const CsrMatrix& shift() const { return shift_; }
    const std::optional<CsrMatrix>& raw_weights() const { return raw_weights_; }

    /// Nonzero pattern of S + I.
    const std::shared_ptr<const CsrPattern>& support_with_diag() const { return support_diag_; }
    /// Off-diagonal pattern of S (the edge set).
    const std::shared_ptr<const CsrPattern>& support_edges() const { return support_edges_; }

    /// N_i = { j : (j, i) in E }, sorted.
    const std::vector<Index>& neighbors(Index i) const { return neighborhoods_[i]; }
    Index degree(Index i) const { return static_cast<Index>(neighborhoods_[i].size()); }

    /// max |S(i,j) - S(j,i)|.
    double max_asymmetry() const;

    /// Same structure, new shift values (same pattern).
    Graph with_shift(CsrMatrix shift) const;

private:
    CsrMatrix shift_;
    bool directed_;
    std::optional<CsrMatrix> raw_weights_;
    Index num_edges_ = 0;
    std::shared_ptr<const CsrPattern> support_diag_;
    std::shared_ptr<const CsrPattern> support_edges_;
    std::vector<std::vector<Index>> neighborhoods_;
};

/// Undirected unweighted stochastic block model. Nodes are split into contiguous
/// blocks of num_nodes / num_communities. Connectivity is not enforced.
Graph build_sbm(Index num_nodes, Index num_communities, double p_intra, double p_inter,
                std::uint64_t seed);

/// 0-based community of node i under the contiguous-block convention.
Index community_of(Index node, Index num_nodes, Index num_communities);

/// S = W / lambda_max(W), W the raw weights.
Graph normalize_by_spectral_radius(const Graph& g);

/// S x.
GraphSignal shift_apply(const Graph& g, const GraphSignal& x);

/// Connectivity of the underlying undirected graph.
bool is_connected(const Graph& g);

/// Unweighted hop distance from the nearest source (-1 when unreachable).
/// `owner` receives the index into `sources` of the nearest source, ties going to the
/// lowest source index.
std::vector<Index> hop_distances(const Graph& g, const std::vector<Index>& sources,
                                 std::vector<Index>* owner = nullptr);

// ---- text formats ---------------------------------------------------------

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// Header `N M directed|undirected`, then one `i j w` line per stored entry of S
/// (1-indexed; diagonal entries included).
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is);

/// Header `rows,cols` followed by row-major comma-separated values.
void write_dense_csv(std::ostream& os, const Matrix& m);
Matrix read_dense_csv(std::istream& is);

} // namespace evgraph
