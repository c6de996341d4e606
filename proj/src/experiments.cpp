#include "evgraph/experiments.hpp"

#include "evgraph/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace evgraph {

Index label_of_node(Index i, Index num_nodes, Index num_communities) {
    if (num_nodes < 1 || num_communities < 1)
        throw InvalidArgument("label_of_node: counts must be positive");
    if (i < 1 || i > num_nodes)
        throw InvalidArgument("label_of_node: node " + std::to_string(i) + " outside [1, " +
                              std::to_string(num_nodes) + "]");
    return (i * num_communities + num_nodes - 1) / num_nodes;
}

SourceMode parse_source_mode(std::string_view name) {
    if (name == "representative") return SourceMode::representative;
    if (name == "uniform") return SourceMode::uniform;
    throw InvalidArgument("unknown source mode '" + std::string(name) + "'");
}

std::string_view to_string(SourceMode m) {
    return m == SourceMode::representative ? "representative" : "uniform";
}

SourceGenerator::SourceGenerator(const Graph& g, Index num_communities, Index t_min, Index t_max,
                                 SourceMode mode)
    : graph_(&g), communities_(num_communities), t_min_(t_min), t_max_(t_max), mode_(mode) {
    const Index n = g.num_nodes();
    if (num_communities < 1 || n % num_communities != 0)
        throw InvalidArgument("source generator: " + std::to_string(n) +
                              " nodes do not split into " + std::to_string(num_communities) +
                              " equal communities");
    if (t_min < 0 || t_max < t_min)
        throw InvalidArgument("source generator: invalid diffusion time range");
    if (g.directed()) throw InvalidArgument("source generator: graph must be undirected");
    const double top = symmetric_eigen(g.shift().to_dense()).eigenvalues.maxCoeff();
    if (std::abs(top - 1.0) > 1e-9)
        throw InvalidArgument("source generator: graph is not normalized (largest eigenvalue " +
                              format_double(top) + ")");
    const Index size = n / num_communities;
    for (Index c = 0; c < num_communities; ++c) {
        Index best = c * size;
        for (Index i = c * size + 1; i < (c + 1) * size; ++i)
            if (g.degree(i) > g.degree(best)) best = i;
        representatives_.push_back(best);
    }
}

GraphSignal SourceGenerator::diffuse(Index source, Index t) const {
    GraphSignal x = GraphSignal::Zero(graph_->num_nodes(), 1);
    x(source, 0) = 1.0;
    for (Index k = 0; k < t; ++k) x = shift_apply(*graph_, x);
    return x;
}

SourceSample SourceGenerator::operator()(Rng& rng) const {
    const Index size = graph_->num_nodes() / communities_;
    SourceSample s;
    s.label = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(communities_)));
    if (mode_ == SourceMode::representative)
        s.source = representatives_[static_cast<std::size_t>(s.label)];
    else
        s.source = s.label * size + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(size)));
    s.time = t_min_ + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(t_max_ - t_min_ + 1)));
    s.signal = diffuse(s.source, s.time);
    return s;
}

SourceSample gen_source_sample(const Graph& g, Index num_communities, Index t_min, Index t_max,
                               Rng& rng, SourceMode mode) {
    return SourceGenerator(g, num_communities, t_min, t_max, mode)(rng);
}

std::vector<Architecture> default_architectures(Index order, Index num_knots, Index privileged_size,
                                                Index features, bool bias) {
    auto make = [&](std::string name, std::string title, FilterFamily fam,
                    SelectionStrategy strategy = SelectionStrategy::max_degree) {
        LayerSpec s;
        s.out_features = features;
        s.family = fam;
        s.order = order;
        s.num_knots = num_knots;
        s.privileged_size = privileged_size;
        s.strategy = strategy;
        s.bias = bias;
        return Architecture{std::move(name), std::move(title), s};
    };
    return {
        make("spectral", "Spectral", FilterFamily::spectral),
        make("polynomial", "Polynomial", FilterFamily::polynomial),
        make("nv-degree", "Node Variant (NV) Degree", FilterFamily::node_variant),
        make("nv-proxies", "Node Variant (NV) S. Proxies", FilterFamily::node_variant,
             SelectionStrategy::spectral_proxies),
        make("ev", "Edge Variant (EV)", FilterFamily::edge_variant),
        make("hev-degree", "Hybrid EV (HEV) Degree", FilterFamily::hybrid_ev),
        make("hev-proxies", "Hybrid EV (HEV) S. Proxies", FilterFamily::hybrid_ev,
             SelectionStrategy::spectral_proxies),
    };
}

void SourceLocConfig::validate() const {
    auto positive = [](Index v, const char* what) {
        if (v < 1) throw InvalidArgument(std::string(what) + " must be positive");
    };
    positive(num_nodes, "num_nodes");
    positive(num_communities, "num_communities");
    positive(num_train, "num_train");
    positive(num_test, "num_test");
    positive(num_graph_realizations, "num_graph_realizations");
    positive(num_data_realizations, "num_data_realizations");
    positive(workers, "workers");
    if (num_nodes % num_communities != 0)
        throw InvalidArgument("num_nodes must be a multiple of num_communities");
    if (!(p_intra >= 0.0 && p_intra <= 1.0) || !(p_inter >= 0.0 && p_inter <= 1.0))
        throw InvalidArgument("edge probabilities must lie in [0, 1]");
    if (t_min < 0 || t_max < t_min || t_max > num_nodes)
        throw InvalidArgument("diffusion time range must satisfy 0 <= t_min <= t_max <= num_nodes");
    if (architectures.empty()) throw InvalidArgument("no architectures selected");
    for (const auto& a : architectures) {
        if (a.layer.in_features != 1)
            throw InvalidArgument("architecture '" + a.name + "' must take one input feature");
        a.layer.validate();
    }
    adam.validate();
}

void parallel_for(Index count, Index workers, const std::function<void(Index)>& fn) {
    if (count <= 0) return;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<Index> next{0};
    auto worker = [&] {
        for (Index i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const Index threads = std::max<Index>(1, std::min(workers, count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

Graph connected_sbm(const SourceLocConfig& cfg, std::uint64_t graph_seed) {
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        Graph g = build_sbm(cfg.num_nodes, cfg.num_communities, cfg.p_intra, cfg.p_inter,
                            derive_seed(graph_seed, "attempt", {attempt}));
        if (is_connected(g)) return normalize_by_spectral_radius(g);
    }
    throw ExperimentFailure("no connected SBM graph in 100 attempts (graph seed " +
                            std::to_string(graph_seed) + ")");
}

std::vector<RunRecord> run_once(const SourceLocConfig& cfg, Index run) {
    const Index gi = run / cfg.num_data_realizations;
    const Index di = run % cfg.num_data_realizations;
    const std::uint64_t graph_seed = derive_seed(cfg.master_seed, "graph", {static_cast<std::uint64_t>(gi)});
    const std::uint64_t data_seed = derive_seed(cfg.master_seed, "data",
                                                {static_cast<std::uint64_t>(gi), static_cast<std::uint64_t>(di)});
    const Graph g = connected_sbm(cfg, graph_seed);
    const Spectrum sp = eigendecompose(g);
    const FilterContext ctx{&g, &sp};

    const SourceGenerator gen(g, cfg.num_communities, cfg.t_min, cfg.t_max, cfg.source_mode);
    Dataset data;
    data.num_classes = cfg.num_communities;
    Rng train_rng(derive_seed(data_seed, "train"));
    for (Index k = 0; k < cfg.num_train; ++k) {
        SourceSample s = gen(train_rng);
        data.samples.push_back({std::move(s.signal), s.label, Split::train});
    }
    Rng test_rng(derive_seed(data_seed, "test"));
    for (Index k = 0; k < cfg.num_test; ++k) {
        SourceSample s = gen(test_rng);
        data.samples.push_back({std::move(s.signal), s.label, Split::test});
    }

    std::vector<RunRecord> out;
    for (std::size_t a = 0; a < cfg.architectures.size(); ++a) {
        const auto& arch = cfg.architectures[a];
        const std::uint64_t arch_seed =
            derive_seed(cfg.master_seed, "architecture", {a, static_cast<std::uint64_t>(run)});
        Model m = build_model({arch.layer}, cfg.num_communities, ctx, derive_seed(arch_seed, "init"));
        AdamConfig adam = cfg.adam;
        adam.seed = derive_seed(arch_seed, "train");
        const TrainResult trained = train(std::move(m), data, ctx, adam);
        out.push_back({run, graph_seed, data_seed, arch.name,
                       evaluate(trained.model, data, Split::test, ctx)});
    }
    return out;
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

} // namespace

SourceLocResult run_source_localization(const SourceLocConfig& cfg,
                                        const std::function<void(Index, Index)>& progress) {
    cfg.validate();
    const Index total = cfg.num_graph_realizations * cfg.num_data_realizations;
    std::vector<std::vector<RunRecord>> per_run(static_cast<std::size_t>(total));
    std::mutex mu;
    Index done = 0;
    parallel_for(total, cfg.workers, [&](Index run) {
        per_run[static_cast<std::size_t>(run)] = run_once(cfg, run);
        if (progress) {
            std::lock_guard lock(mu);
            progress(++done, total);
        }
    });
    SourceLocResult result;
    for (auto& r : per_run)
        for (auto& rec : r) result.runs.push_back(std::move(rec));
    result.table = aggregate(result.runs, cfg.architectures);
    return result;
}

std::vector<ResultsRow> aggregate(const std::vector<RunRecord>& runs,
                                  const std::vector<Architecture>& architectures) {
    std::vector<ResultsRow> rows;
    for (const auto& arch : architectures) {
        ResultsRow row{arch.name, arch.title, 0.0, 0.0, 0};
        double sum = 0.0;
        for (const auto& r : runs)
            if (r.architecture == arch.name) {
                sum += r.test_accuracy;
                ++row.runs;
            }
        if (row.runs == 0) throw InvalidArgument("aggregate: no runs for '" + arch.name + "'");
        row.mean = sum / static_cast<double>(row.runs);
        double sq = 0.0;
        for (const auto& r : runs)
            if (r.architecture == arch.name) sq += (r.test_accuracy - row.mean) * (r.test_accuracy - row.mean);
        row.stddev = std::sqrt(sq / static_cast<double>(row.runs));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string runs_csv(const std::vector<RunRecord>& runs) {
    std::ostringstream os;
    os << "run_id,graph_seed,data_seed,architecture,test_accuracy\n";
    for (const auto& r : runs)
        os << r.run_id << ',' << r.graph_seed << ',' << r.data_seed << ',' << r.architecture << ','
           << format_double(r.test_accuracy) << '\n';
    return os.str();
}

std::string results_csv(const std::vector<ResultsRow>& rows) {
    std::ostringstream os;
    os << "architecture,mean_accuracy,std_accuracy,runs\n";
    for (const auto& r : rows)
        os << r.architecture << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ','
           << r.runs << '\n';
    return os.str();
}

std::string results_text_table(const std::vector<ResultsRow>& rows, const std::string& caption) {
    std::size_t width = 5;
    for (const auto& r : rows) width = std::max(width, r.title.size());
    std::vector<std::string> cells;
    std::size_t cell_width = 8;
    for (const auto& r : rows) {
        std::string stddev = percent(r.stddev);
        if (stddev.size() < 5) stddev.insert(0, 5 - stddev.size(), ' ');
        cells.push_back(percent(r.mean) + " (+- " + stddev + ")%");
        cell_width = std::max(cell_width, cells.back().size());
    }
    auto pad = [](std::string s, std::size_t w, bool right) {
        const std::string fill(w > s.size() ? w - s.size() : 0, ' ');
        return right ? fill + s : s + fill;
    };
    const std::string rule(width + 3 + cell_width, '-');
    std::ostringstream os;
    if (!caption.empty()) os << caption << '\n';
    os << rule << '\n' << pad("Model", width, false) << "   " << pad("Accuracy", cell_width, true) << '\n'
       << rule << '\n';
    for (std::size_t k = 0; k < rows.size(); ++k)
        os << pad(rows[k].title, width, false) << "   " << pad(cells[k], cell_width, true) << '\n';
    os << rule << '\n';
    return os.str();
}

} // namespace evgraph
