#include "evgraph/archive.hpp"
#include "evgraph/config.hpp"
#include "evgraph/errors.hpp"
#include "evgraph/experiments.hpp"
#include "evgraph/gradcheck.hpp"
#include "evgraph/graph.hpp"
#include "evgraph/response.hpp"
#include "evgraph/wan.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace evgraph;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

/// Input or configuration problem, reported with exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string out;
    std::optional<Index> workers;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
    auto* opt = cmd->add_option("--config", c.config, "key = value configuration file");
    if (needs_config) opt->required();
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--workers", c.workers, "worker threads (overrides the workers key)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--dry-run", c.dry_run, "validate and print the resolved settings, write nothing");
}

KeyValueConfig load_config(const Common& c) {
    KeyValueConfig kv = c.config.empty() ? KeyValueConfig::parse("", "(defaults)") : KeyValueConfig::load(c.config);
    if (c.workers) kv.set("workers", std::to_string(*c.workers));
    return kv;
}

fs::path output_dir(const Common& c) {
    if (c.out.empty()) throw UsageError("--out is required unless --dry-run is given");
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw UsageError("cannot create output directory '" + c.out + "': " + ec.message());
    return fs::path(c.out);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << text;
    os.close();
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void report_progress(const char* what, Index done, Index total) {
    std::fprintf(stderr, "%s: run %lld/%lld done\n", what, static_cast<long long>(done),
                 static_cast<long long>(total));
}

int cmd_source_loc(const Common& c) {
    SourceLocConfig cfg;
    {
        KeyValueConfig kv = load_config(c);
        cfg = source_loc_config(kv);
    }
    if (c.dry_run) {
        std::cout << describe(cfg) << "outputs = runs.csv, results.csv, results.txt\n";
        return exit_ok;
    }
    const fs::path out = output_dir(c);
    const auto result =
        run_source_localization(cfg, [](Index d, Index t) { report_progress("source-loc", d, t); });
    write_file(out / "runs.csv", runs_csv(result.runs));
    write_file(out / "results.csv", results_csv(result.table));
    const std::string table = results_text_table(result.table, "Source localization test accuracy");
    write_file(out / "results.txt", table);
    std::cout << table;
    return exit_ok;
}

int cmd_author(const Common& c, const std::string& corpus_flag) {
    AuthorSettings s;
    {
        KeyValueConfig kv = load_config(c);
        s = author_settings(kv);
    }
    if (!corpus_flag.empty()) s.corpus = fs::path(corpus_flag);
    if (!s.corpus) throw UsageError("no corpus: pass --corpus or set the corpus key");
    if (c.dry_run) {
        std::cout << describe(s) << "outputs = runs.csv, accuracy.csv, results.txt\n";
        return exit_ok;
    }
    Corpus corpus;
    Vocabulary vocab;
    try {
        corpus = load_corpus(*s.corpus);
        vocab = s.function_words ? load_vocabulary(*s.function_words) : default_vocabulary();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (corpus.count(s.config.target_author) == 0)
        throw UsageError("target author '" + s.config.target_author + "' has no excerpts in '" +
                         s.corpus->string() + "'");
    const fs::path out = output_dir(c);
    const auto result =
        run_authorship(s.config, corpus, vocab, [](Index d, Index t) { report_progress("author", d, t); });
    write_file(out / "runs.csv", author_runs_csv(result.runs));
    write_file(out / "accuracy.csv", author_accuracy_csv(result));
    std::string text;
    for (const auto& [split, rows] : result.tables) {
        if (rows.empty()) continue;
        text += results_text_table(rows, "Authorship accuracy (" + std::string(to_string(split)) + ")");
        text += '\n';
    }
    write_file(out / "results.txt", text);
    std::cout << text;
    return exit_ok;
}

struct GradcheckArgs {
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    std::optional<Index> probes;
};

int cmd_gradcheck(const Common& c, const GradcheckArgs& a) {
    KeyValueConfig kv = load_config(c);
    const std::uint64_t seed = a.seed.value_or(kv.get_uint64("seed").value_or(1));
    const double tolerance = a.tolerance.value_or(kv.get_double("tolerance").value_or(1e-5));
    GradcheckOptions opts;
    opts.probes = a.probes.value_or(kv.get_int("probes").value_or(opts.probes));
    opts.step = kv.get_double("step").value_or(opts.step);
    kv.get_int("workers");
    kv.finish();
    if (tolerance < 0.0) throw UsageError("tolerance must be non-negative");
    try {
        opts.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (c.dry_run) {
        std::cout << "seed = " << seed << "\ntolerance = " << format_double(tolerance)
                  << "\nprobes = " << opts.probes << "\nstep = " << format_double(opts.step)
                  << "\noutputs = gradcheck.csv\n";
        return exit_ok;
    }
    const auto results = gradient_check(seed, opts);
    std::ostringstream csv;
    csv << "family,probes,skipped_kinks,max_relative_error,max_abs_error,pass\n";
    bool all = true;
    for (const auto& r : results) {
        const bool pass = r.max_relative_error < tolerance;
        all = all && pass;
        csv << to_string(r.family) << ',' << r.probes << ',' << r.skipped_kinks << ','
            << format_double(r.max_relative_error) << ',' << format_double(r.max_abs_error) << ','
            << (pass ? "true" : "false") << '\n';
    }
    std::cout << csv.str();
    if (!c.out.empty()) write_file(output_dir(c) / "gradcheck.csv", csv.str());
    return all ? exit_ok : exit_runtime;
}

int cmd_spectral_response(const Common& c, std::string graph_path, std::string filter_path) {
    KeyValueConfig kv = load_config(c);
    if (graph_path.empty()) graph_path = kv.get_path("graph").value_or("").string();
    if (filter_path.empty()) filter_path = kv.get_path("filter").value_or("").string();
    kv.get_int("workers");
    kv.finish();
    if (graph_path.empty()) throw UsageError("no graph: pass --graph or set the graph key");
    if (filter_path.empty()) throw UsageError("no filter: pass --filter or set the filter key");
    std::optional<Graph> g;
    FilterParams filter;
    try {
        std::ifstream in(graph_path);
        if (!in) throw InvalidArgument("cannot open graph file '" + graph_path + "'");
        g.emplace(read_edge_list(in));
        filter = load_filter(filter_path);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (g->directed()) throw UsageError("graph '" + graph_path + "' is directed; a symmetric graph is required");
    if (c.dry_run) {
        std::cout << "graph = " << graph_path << "\nfilter = " << filter_path
                  << "\nfamily = " << to_string(family_of(filter)) << "\noutputs = response.csv\n";
        return exit_ok;
    }
    SpectralResponse r;
    try {
        r = spectral_response(filter, *g);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const std::string csv = response_csv(r, family_of(filter));
    write_file(output_dir(c) / "response.csv", csv);
    std::cout << csv;
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-filter neural networks: source localization, authorship attribution, "
                 "gradient checks and filter frequency responses."};
    app.name("evgraph");
    app.require_subcommand(1);

    Common source_common, author_common, grad_common, resp_common;
    auto* source = app.add_subcommand("source-loc", "source localization on stochastic block models");
    add_common(source, source_common, true);

    auto* author = app.add_subcommand("author", "authorship attribution on word adjacency networks");
    add_common(author, author_common, true);
    std::string corpus;
    author->add_option("--corpus", corpus, "corpus directory <author>/<excerpt>.txt");

    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of backpropagation");
    add_common(grad, grad_common, false);
    GradcheckArgs gargs;
    grad->add_option("--seed", gargs.seed, "random seed (default 1)");
    grad->add_option("--tolerance", gargs.tolerance, "relative error bound (default 1e-5)");
    grad->add_option("--probes", gargs.probes, "parameters checked per family (default 20)");

    auto* resp = app.add_subcommand("spectral-response", "filter response in the graph frequency domain");
    add_common(resp, resp_common, false);
    std::string graph_path, filter_path;
    resp->add_option("--graph", graph_path, "edge-list file of a symmetric graph");
    resp->add_option("--filter", filter_path, "filter archive (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*source) return cmd_source_loc(source_common);
        if (*author) return cmd_author(author_common, corpus);
        if (*grad) return cmd_gradcheck(grad_common, gargs);
        return cmd_spectral_response(resp_common, graph_path, filter_path);
    } catch (const ConfigError& e) {
        std::cerr << "evgraph: config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const UsageError& e) {
        std::cerr << "evgraph: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "evgraph: " << e.what() << '\n';
        return exit_runtime;
    }
}
