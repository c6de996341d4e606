#include "evgraph/archive.hpp"
#include "evgraph/config.hpp"
#include "evgraph/errors.hpp"
#include "evgraph/experiments.hpp"
#include "evgraph/gradcheck.hpp"
#include "evgraph/graph.hpp"
#include "evgraph/response.hpp"
#include "evgraph/spectrum.hpp"
#include "evgraph/wan.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace evgraph;

namespace {

Graph graph_from_dense(const Matrix& s, std::optional<bool> directed) {
    if (s.rows() != s.cols()) throw InvalidArgument("shift matrix must be square");
    std::vector<Triplet> t;
    for (Index i = 0; i < s.rows(); ++i)
        for (Index j = 0; j < s.cols(); ++j)
            if (s(i, j) != 0.0) t.push_back({i, j, s(i, j)});
    const bool dir = directed.value_or((s - s.transpose()).cwiseAbs().maxCoeff() > 0.0);
    return Graph::from_triplets(s.rows(), std::move(t), dir);
}

/// Python handle for a filter. Spectral families get the graph's eigendecomposition
/// computed per call, so callers never manage a spectrum.
struct BoundFilter {
    FilterParams params;
};

FilterContext context_for(const Graph& g, std::optional<Spectrum>& sp, const FilterParams& p) {
    const FilterFamily f = family_of(p);
    if (f == FilterFamily::spectral || f == FilterFamily::spectral_ev) sp.emplace(eigendecompose(g));
    return FilterContext{&g, sp ? &*sp : nullptr};
}

BoundFilter random_bound_filter(const std::string& family, const Graph& g, Index order, Index num_knots,
                                Index privileged_size, const std::string& strategy, bool use_self_loops,
                                std::uint64_t seed) {
    LayerSpec spec;
    spec.family = parse_filter_family(family);
    spec.order = order;
    spec.num_knots = num_knots;
    spec.privileged_size = privileged_size;
    spec.strategy = parse_selection_strategy(strategy);
    spec.use_self_loops = use_self_loops;
    std::optional<Spectrum> sp;
    if (spec.family == FilterFamily::spectral || spec.family == FilterFamily::spectral_ev)
        sp.emplace(eigendecompose(g));
    const FilterContext ctx{&g, sp ? &*sp : nullptr};
    Rng rng(derive_seed(seed, "init"));
    const FilterSpec fs = resolve_filter_spec(spec, ctx, derive_seed(seed, "structure"));
    return {random_filter(fs, ctx, 1, rng)};
}

py::dict results_dict(const std::vector<ResultsRow>& rows) {
    py::dict d;
    for (const auto& r : rows) {
        py::dict row;
        row["title"] = r.title;
        row["mean"] = r.mean;
        row["std"] = r.stddev;
        row["runs"] = r.runs;
        d[py::str(r.architecture)] = row;
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_evgraph, m) {
    m.doc() = "Graph-filter neural networks with edge-varying filters";

    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", invalid.ptr());
    py::register_exception<UnsupportedGraph>(m, "UnsupportedGraph", PyExc_ValueError);
    py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);
    py::register_exception<ExperimentFailure>(m, "ExperimentFailure", PyExc_RuntimeError);

    py::class_<Graph>(m, "Graph")
        .def(py::init(&graph_from_dense), py::arg("shift"), py::arg("directed") = py::none(),
             "Graph from a dense shift matrix; S[i, j] != 0 is the edge (j, i). Directedness is "
             "inferred from symmetry unless given.")
        .def_property_readonly("num_nodes", &Graph::num_nodes)
        .def_property_readonly("num_edges", &Graph::num_directed_edges)
        .def_property_readonly("directed", &Graph::directed)
        .def("shift", [](const Graph& g) { return g.shift().to_dense(); })
        .def("neighbors", &Graph::neighbors)
        .def("to_edge_list",
             [](const Graph& g) {
                 std::ostringstream os;
                 write_edge_list(os, g);
                 return os.str();
             })
        .def_static("from_edge_list",
                    [](const std::string& text) {
                        std::istringstream is(text);
                        return read_edge_list(is);
                    })
        .def("__repr__", [](const Graph& g) {
            return "<Graph nodes=" + std::to_string(g.num_nodes()) + " edges=" +
                   std::to_string(g.num_directed_edges()) + (g.directed() ? " directed>" : " undirected>");
        });

    m.def("build_sbm", &build_sbm, py::arg("num_nodes"), py::arg("num_communities"), py::arg("p_intra"),
          py::arg("p_inter"), py::arg("seed"));
    m.def("normalize_by_spectral_radius", &normalize_by_spectral_radius);
    m.def("is_connected", &is_connected);
    m.def(
        "eigendecompose",
        [](const Graph& g) {
            const Spectrum sp = eigendecompose(g);
            return py::make_tuple(sp.eigenvalues, sp.eigenvectors);
        },
        "Ascending eigenvalues and the matching orthonormal eigenvectors of a symmetric shift.");

    py::class_<BoundFilter>(m, "Filter")
        .def_static("from_json", [](const std::string& s) { return BoundFilter{filter_from_json(s)}; })
        .def_static("load", [](const std::filesystem::path& p) { return BoundFilter{load_filter(p)}; })
        .def_static("polynomial", [](std::vector<double> taps) { return BoundFilter{PolyParams{std::move(taps)}}; },
                    py::arg("taps"))
        .def_static("ev_from_poly",
                    [](std::vector<double> taps, const Graph& g) {
                        return BoundFilter{ev_from_poly(PolyParams{std::move(taps)}, g)};
                    },
                    py::arg("taps"), py::arg("graph"))
        .def_static("random", &random_bound_filter, py::arg("family"), py::arg("graph"), py::arg("order") = 2,
                    py::arg("num_knots") = 5, py::arg("privileged_size") = 2,
                    py::arg("strategy") = "max-degree", py::arg("use_self_loops") = true, py::arg("seed") = 1)
        .def_property_readonly("family", [](const BoundFilter& f) { return std::string(to_string(family_of(f.params))); })
        .def_property_readonly("num_parameters", [](const BoundFilter& f) { return param_count(f.params); })
        .def("to_json", [](const BoundFilter& f) { return filter_to_json(f.params); })
        .def("save", [](const BoundFilter& f, const std::filesystem::path& p) { save_filter(f.params, p); })
        .def("forward",
             [](const BoundFilter& f, const Graph& g, const Matrix& x) {
                 std::optional<Spectrum> sp;
                 return filter_forward(f.params, context_for(g, sp, f.params), x);
             },
             py::arg("graph"), py::arg("x"), "y = H(S) x for an N x F signal.")
        .def("dense",
             [](const BoundFilter& f, const Graph& g) {
                 std::optional<Spectrum> sp;
                 return dense_operator(f.params, context_for(g, sp, f.params));
             },
             py::arg("graph"), "Dense H(S).")
        .def(
            "spectral_response",
            [](const BoundFilter& f, const Graph& g) {
                const SpectralResponse r = spectral_response(f.params, g);
                py::dict d;
                d["eigenvalues"] = r.eigenvalues;
                d["response"] = r.response;
                d["offdiag_energy"] = r.offdiag_energy;
                d["diagonal"] = r.diagonal;
                return d;
            },
            py::arg("graph"));

    m.def(
        "gradient_check",
        [](std::uint64_t seed, Index probes, double step) {
            GradcheckOptions o;
            o.probes = probes;
            o.step = step;
            py::list out;
            for (const auto& r : gradient_check(seed, o)) {
                py::dict d;
                d["family"] = std::string(to_string(r.family));
                d["probes"] = r.probes;
                d["skipped_kinks"] = r.skipped_kinks;
                d["max_relative_error"] = r.max_relative_error;
                d["max_abs_error"] = r.max_abs_error;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 1, py::arg("probes") = 20, py::arg("step") = 1e-5,
        "Backpropagation vs central differences for every filter family.");

    m.def("label_of_node", &label_of_node, py::arg("i"), py::arg("num_nodes"), py::arg("num_communities"));
    m.def(
        "diffuse",
        [](const Graph& g, Index num_communities, Index source, Index t) {
            return SourceGenerator(g, num_communities, 0, std::max<Index>(t, 0)).diffuse(source, t);
        },
        py::arg("graph"), py::arg("num_communities"), py::arg("source"), py::arg("t"), "S^t delta_source.");

    m.def(
        "run_source_localization",
        [](const std::string& config_text) {
            KeyValueConfig kv = KeyValueConfig::parse(config_text, "<config>");
            const SourceLocConfig cfg = source_loc_config(kv);
            SourceLocResult r;
            {
                py::gil_scoped_release release;
                r = run_source_localization(cfg);
            }
            py::dict d;
            d["runs_csv"] = runs_csv(r.runs);
            d["results"] = results_dict(r.table);
            d["table"] = results_text_table(r.table, "Source localization test accuracy");
            return d;
        },
        py::arg("config_text") = "", "Runs the source-localization benchmark from `key = value` text.");

    m.def("tokenize", &tokenize);
    m.def("default_function_words", []() { return default_vocabulary().words(); });
    m.def(
        "build_wan",
        [](const std::vector<std::string>& tokens, std::vector<std::string> words, Index window, double decay,
           bool normalize) { return build_wan(tokens, Vocabulary(std::move(words)), WanConfig{window, decay, normalize}); },
        py::arg("tokens"), py::arg("words"), py::arg("window") = 10, py::arg("decay") = 0.8,
        py::arg("normalize") = true);
    m.def("signature_graph", &signature_graph, py::arg("wans"));
    m.def(
        "frequency_signal",
        [](const std::vector<std::string>& tokens, std::vector<std::string> words) {
            return frequency_signal(tokens, Vocabulary(std::move(words)));
        },
        py::arg("tokens"), py::arg("words"));
    m.def(
        "run_authorship",
        [](const std::string& config_text, const std::filesystem::path& corpus_dir) {
            KeyValueConfig kv = KeyValueConfig::parse(config_text, "<config>");
            const AuthorSettings s = author_settings(kv);
            const Corpus corpus = load_corpus(corpus_dir);
            const Vocabulary vocab = s.function_words ? load_vocabulary(*s.function_words) : default_vocabulary();
            AuthorResult r;
            {
                py::gil_scoped_release release;
                r = run_authorship(s.config, corpus, vocab);
            }
            py::dict d;
            d["runs_csv"] = author_runs_csv(r.runs);
            d["accuracy_csv"] = author_accuracy_csv(r);
            py::dict tables;
            for (const auto& [split, rows] : r.tables) tables[py::str(std::string(to_string(split)))] = results_dict(rows);
            d["results"] = tables;
            return d;
        },
        py::arg("config_text"), py::arg("corpus_dir"));
}
