#include "evgraph/graph.hpp"

#include "evgraph/errors.hpp"
#include "evgraph/random.hpp"
#include "evgraph/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>

namespace evgraph {

namespace {

std::shared_ptr<const CsrPattern> pattern_with_diag(const CsrPattern& p) {
    auto out = std::make_shared<CsrPattern>();
    out->rows = p.rows;
    out->cols = p.cols;
    out->row_ptr.assign(p.rows + 1, 0);
    for (Index i = 0; i < p.rows; ++i) {
        bool placed = false;
        for (Index q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q) {
            Index j = p.col_idx[q];
            if (!placed && j >= i) {
                if (j != i) out->col_idx.push_back(i);
                placed = true;
            }
            out->col_idx.push_back(j);
        }
        if (!placed) out->col_idx.push_back(i);
        out->row_ptr[i + 1] = static_cast<Index>(out->col_idx.size());
    }
    return out;
}

std::shared_ptr<const CsrPattern> pattern_without_diag(const CsrPattern& p) {
    auto out = std::make_shared<CsrPattern>();
    out->rows = p.rows;
    out->cols = p.cols;
    out->row_ptr.assign(p.rows + 1, 0);
    for (Index i = 0; i < p.rows; ++i) {
        for (Index q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q)
            if (p.col_idx[q] != i) out->col_idx.push_back(p.col_idx[q]);
        out->row_ptr[i + 1] = static_cast<Index>(out->col_idx.size());
    }
    return out;
}

} // namespace

Graph::Graph(CsrMatrix shift, bool directed, std::optional<CsrMatrix> raw_weights)
    : shift_(std::move(shift)), directed_(directed), raw_weights_(std::move(raw_weights)) {
    if (!shift_.pattern || shift_.rows() != shift_.cols() || shift_.rows() < 1)
        throw InvalidArgument("graph: shift must be a non-empty square matrix");
    shift_.pattern->validate();
    if (raw_weights_ &&
        (raw_weights_->rows() != shift_.rows() || raw_weights_->cols() != shift_.cols()))
        throw InvalidArgument("graph: raw weights shape differs from shift");
    for (double v : shift_.values)
        if (!std::isfinite(v)) throw InvalidArgument("graph: non-finite shift entry");

    const auto& p = *shift_.pattern;
    neighborhoods_.resize(p.rows);
    for (Index i = 0; i < p.rows; ++i)
        for (Index q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q)
            if (p.col_idx[q] != i) {
                neighborhoods_[i].push_back(p.col_idx[q]);
                ++num_edges_;
            }
    if (!directed_) {
        for (Index i = 0; i < p.rows; ++i)
            for (Index q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q) {
                Index j = p.col_idx[q];
                Index back = p.find(j, i);
                if (back < 0 || shift_.values[back] != shift_.values[q])
                    throw InvalidArgument("graph: undirected shift is not exactly symmetric at (" +
                                          std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                          ")");
            }
    }
    support_diag_ = pattern_with_diag(p);
    support_edges_ = pattern_without_diag(p);
}

Graph Graph::from_triplets(Index num_nodes, std::vector<Triplet> entries, bool directed,
                           bool keep_raw_weights) {
    auto s = CsrMatrix::from_triplets(num_nodes, num_nodes, std::move(entries));
    std::optional<CsrMatrix> raw;
    if (keep_raw_weights) raw = s;
    return Graph(std::move(s), directed, std::move(raw));
}

double Graph::max_asymmetry() const {
    const auto& p = *shift_.pattern;
    double m = 0.0;
    for (Index i = 0; i < p.rows; ++i)
        for (Index q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q)
            m = std::max(m, std::abs(shift_.values[q] - shift_.at(p.col_idx[q], i)));
    return m;
}

Graph Graph::with_shift(CsrMatrix shift) const {
    if (!shift.pattern || !(*shift.pattern == *shift_.pattern))
        throw InvalidArgument("graph: replacement shift must keep the pattern");
    return Graph(std::move(shift), directed_, raw_weights_);
}

Graph build_sbm(Index num_nodes, Index num_communities, double p_intra, double p_inter,
                std::uint64_t seed) {
    if (num_nodes < 1 || num_communities < 1 || num_nodes % num_communities != 0)
        throw InvalidArgument("build_sbm: " + std::to_string(num_nodes) +
                              " nodes cannot be split evenly into " +
                              std::to_string(num_communities) + " communities");
    if (!(p_intra >= 0.0 && p_intra <= 1.0 && p_inter >= 0.0 && p_inter <= 1.0))
        throw InvalidArgument("build_sbm: probabilities must lie in [0, 1]");
    Rng rng(seed);
    std::vector<Triplet> t;
    for (Index i = 0; i < num_nodes; ++i)
        for (Index j = i + 1; j < num_nodes; ++j) {
            const bool same = community_of(i, num_nodes, num_communities) ==
                              community_of(j, num_nodes, num_communities);
            const double p = same ? p_intra : p_inter;
            if (uniform01(rng) < p) {
                t.push_back({i, j, 1.0});
                t.push_back({j, i, 1.0});
            }
        }
    return Graph::from_triplets(num_nodes, std::move(t), false);
}

Index community_of(Index node, Index num_nodes, Index num_communities) {
    return node / (num_nodes / num_communities);
}

Graph normalize_by_spectral_radius(const Graph& g) {
    if (g.directed()) throw UnsupportedGraph("normalize_by_spectral_radius: graph is directed");
    if (!g.raw_weights()) throw InvalidArgument("normalize_by_spectral_radius: no raw weights");
    const CsrMatrix& w = *g.raw_weights();
    Spectrum sp = symmetric_eigen(w.to_dense());
    const double lmax = sp.eigenvalues(sp.size() - 1);
    if (!(lmax > 0.0))
        throw InvalidArgument("normalize_by_spectral_radius: largest eigenvalue is " +
                              format_double(lmax) + ", cannot normalize");
    std::vector<double> v(w.values);
    for (double& x : v) x /= lmax;
    return Graph(CsrMatrix(w.pattern, std::move(v)), false, w);
}

GraphSignal shift_apply(const Graph& g, const GraphSignal& x) {
    if (x.rows() != g.num_nodes())
        throw InvalidArgument("shift_apply: signal has " + std::to_string(x.rows()) +
                              " rows, graph has " + std::to_string(g.num_nodes()) + " nodes");
    return spmm(g.shift(), x);
}

std::vector<Index> hop_distances(const Graph& g, const std::vector<Index>& sources,
                                 std::vector<Index>* owner) {
    const Index n = g.num_nodes();
    std::vector<std::vector<Index>> adj(n);
    for (Index i = 0; i < n; ++i)
        for (Index j : g.neighbors(i)) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    std::vector<Index> dist(n, -1), own(n, -1);
    // Sources are visited in index order and owners propagate by BFS layers; within a
    // layer the smallest owner index wins.
    std::vector<Index> frontier;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        Index v = sources[s];
        if (v < 0 || v >= n) throw InvalidArgument("hop_distances: source out of range");
        if (dist[v] == 0) continue;
        dist[v] = 0;
        own[v] = static_cast<Index>(s);
        frontier.push_back(v);
    }
    Index level = 0;
    while (!frontier.empty()) {
        std::vector<Index> next;
        for (Index u : frontier)
            for (Index w : adj[u]) {
                if (dist[w] == -1) {
                    dist[w] = level + 1;
                    own[w] = own[u];
                    next.push_back(w);
                } else if (dist[w] == level + 1 && own[u] < own[w]) {
                    own[w] = own[u];
                }
            }
        frontier = std::move(next);
        ++level;
    }
    if (owner) *owner = std::move(own);
    return dist;
}

bool is_connected(const Graph& g) {
    auto d = hop_distances(g, {0});
    return std::none_of(d.begin(), d.end(), [](Index x) { return x < 0; });
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_edge_list(std::ostream& os, const Graph& g) {
    os << g.num_nodes() << ' ' << g.num_directed_edges() << ' '
       << (g.directed() ? "directed" : "undirected") << '\n';
    const auto& s = g.shift();
    const auto& p = *s.pattern;
    for (Index i = 0; i < p.rows; ++i)
        for (Index q = p.row_ptr[i]; q < p.row_ptr[i + 1]; ++q)
            os << i + 1 << ' ' << p.col_idx[q] + 1 << ' ' << format_double(s.values[q]) << '\n';
}

Graph read_edge_list(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("edge list: missing header");
    std::istringstream hs(line);
    Index n = 0, m = 0;
    std::string kind;
    if (!(hs >> n >> m >> kind) || n < 1 || m < 0 || (kind != "directed" && kind != "undirected"))
        throw InvalidArgument("edge list: malformed header '" + line + "'");
    std::vector<Triplet> t;
    Index lineno = 1, off_diag = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Index i = 0, j = 0;
        double w = 0.0;
        if (!(ls >> i >> j >> w) || i < 1 || j < 1 || i > n || j > n)
            throw InvalidArgument("edge list: malformed entry on line " + std::to_string(lineno));
        if (i != j) ++off_diag;
        t.push_back({i - 1, j - 1, w});
    }
    if (off_diag != m)
        throw InvalidArgument("edge list: header declares " + std::to_string(m) +
                              " edges, found " + std::to_string(off_diag));
    return Graph::from_triplets(n, std::move(t), kind == "directed");
}

void write_dense_csv(std::ostream& os, const Matrix& m) {
    os << m.rows() << ',' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << format_double(m(i, j));
        }
        os << '\n';
    }
}

Matrix read_dense_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidArgument("dense csv: missing header");
    Index rows = 0, cols = 0;
    char comma = 0;
    std::istringstream hs(line);
    if (!(hs >> rows >> comma >> cols) || comma != ',' || rows < 0 || cols < 0)
        throw InvalidArgument("dense csv: malformed header '" + line + "'");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (!std::getline(is, line))
            throw InvalidArgument("dense csv: expected " + std::to_string(rows) + " rows");
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (Index j = 0; j < cols; ++j) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc())
                throw InvalidArgument("dense csv: bad value in row " + std::to_string(i + 1));
            m(i, j) = v;
            p = res.ptr;
            if (j + 1 < cols) {
                if (p == end || *p != ',')
                    throw InvalidArgument("dense csv: short row " + std::to_string(i + 1));
                ++p;
            }
        }
    }
    return m;
}

} // namespace evgraph
