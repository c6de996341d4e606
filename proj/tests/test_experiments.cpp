#include "evgraph/errors.hpp"
#include "evgraph/experiments.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <sstream>

using namespace evgraph;
using namespace evgraph::testing;

namespace {

Graph connected_normalized_sbm(Index n, Index c, std::uint64_t seed) {
    for (std::uint64_t s = seed;; ++s) {
        Graph g = build_sbm(n, c, 0.8, 0.2, s);
        if (is_connected(g)) return normalize_by_spectral_radius(g);
    }
}

SourceLocConfig tiny_config() {
    SourceLocConfig cfg;
    cfg.num_nodes = 10;
    cfg.num_communities = 2;
    cfg.num_train = 40;
    cfg.num_test = 20;
    cfg.t_max = 5;
    auto all = default_architectures(2, 3, 2, 2, true);
    cfg.architectures = {all[1], all[4]};
    cfg.adam.epochs = 2;
    cfg.adam.batch_size = 10;
    cfg.num_graph_realizations = 1;
    cfg.num_data_realizations = 1;
    cfg.master_seed = 42;
    return cfg;
}

} // namespace

TEST(LabelOfNode, Examples) {
    EXPECT_EQ(label_of_node(1, 50, 5), 1);
    EXPECT_EQ(label_of_node(50, 50, 5), 5);
    EXPECT_EQ(label_of_node(23, 50, 5), 3);
    for (Index i = 1; i <= 50; ++i) EXPECT_EQ(label_of_node(i, 50, 5), community_of(i - 1, 50, 5) + 1);
    EXPECT_THROW(label_of_node(0, 50, 5), InvalidArgument);
    EXPECT_THROW(label_of_node(51, 50, 5), InvalidArgument);
}

TEST(SourceGenerator, DiffusionMatchesDensePowers) {
    const Graph g = connected_normalized_sbm(50, 5, 3);
    const SourceGenerator gen(g, 5, 0, 50);
    const Matrix s = g.shift().to_dense();
    EXPECT_EQ(gen.diffuse(7, 0), delta(50, 7));
    EXPECT_LT(max_abs_diff(gen.diffuse(7, 1), s.col(7)), 1e-15);
    EXPECT_LT(max_abs_diff(gen.diffuse(13, 7), dense_power(s, 7).col(13)), 1e-10);
}

TEST(SourceGenerator, SamplesAreConsistent) {
    const Graph g = connected_normalized_sbm(50, 5, 8);
    for (auto mode : {SourceMode::representative, SourceMode::uniform}) {
        const SourceGenerator gen(g, 5, 0, 50, mode);
        Rng rng(1);
        std::set<Index> sources, times, labels;
        for (int k = 0; k < 2000; ++k) {
            const SourceSample s = gen(rng);
            EXPECT_EQ(s.label, community_of(s.source, 50, 5));
            EXPECT_LE(s.signal.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
            if (k < 50) EXPECT_EQ(s.signal, gen.diffuse(s.source, s.time));
            sources.insert(s.source);
            times.insert(s.time);
            labels.insert(s.label);
        }
        EXPECT_EQ(times.size(), 51u);
        EXPECT_EQ(labels.size(), 5u);
        EXPECT_EQ(sources.size(), mode == SourceMode::representative ? 5u : 50u);
    }
}

TEST(SourceGenerator, RepresentativeIsHighestDegreeMember) {
    const Graph g = connected_normalized_sbm(50, 5, 11);
    const SourceGenerator gen(g, 5, 0, 50);
    for (Index c = 0; c < 5; ++c) {
        const Index r = gen.representatives()[c];
        EXPECT_EQ(community_of(r, 50, 5), c);
        for (Index i = c * 10; i < (c + 1) * 10; ++i) {
            EXPECT_LE(g.degree(i), g.degree(r));
            if (i < r) EXPECT_LT(g.degree(i), g.degree(r));
        }
    }
}

TEST(SourceGenerator, RejectsUnnormalizedGraph) {
    const Graph raw = build_sbm(20, 2, 0.9, 0.3, 1);
    Rng rng(0);
    EXPECT_THROW(gen_source_sample(raw, 2, 0, 20, rng), InvalidArgument);
    const Graph g = normalize_by_spectral_radius(raw);
    EXPECT_NO_THROW(gen_source_sample(g, 2, 0, 20, rng));
    EXPECT_THROW(gen_source_sample(g, 3, 0, 20, rng), InvalidArgument);
    EXPECT_THROW(gen_source_sample(g, 2, 5, 4, rng), InvalidArgument);
    EXPECT_THROW(parse_source_mode("random"), InvalidArgument);
}

TEST(SourceLocalization, SingleRunHasZeroStd) {
    const auto r = run_source_localization(tiny_config());
    ASSERT_EQ(r.table.size(), 2u);
    ASSERT_EQ(r.runs.size(), 2u);
    for (const auto& row : r.table) {
        EXPECT_EQ(row.stddev, 0.0);
        EXPECT_EQ(row.runs, 1);
        EXPECT_GE(row.mean, 0.0);
        EXPECT_LE(row.mean, 1.0);
    }
}

TEST(SourceLocalization, DeterministicAcrossWorkerCounts) {
    SourceLocConfig cfg = tiny_config();
    cfg.num_graph_realizations = 2;
    cfg.num_data_realizations = 2;
    const auto a = run_source_localization(cfg);
    cfg.workers = 3;
    Index calls = 0;
    const auto b = run_source_localization(cfg, [&](Index done, Index total) {
        ++calls;
        EXPECT_EQ(total, 4);
        EXPECT_LE(done, total);
    });
    EXPECT_EQ(calls, 4);
    EXPECT_EQ(runs_csv(a.runs), runs_csv(b.runs));
    EXPECT_EQ(results_csv(a.table), results_csv(b.table));
    ASSERT_EQ(a.runs.size(), 8u);
    // Run r = graph * D + data; graph seeds repeat across data realizations.
    EXPECT_EQ(a.runs[0].graph_seed, a.runs[2].graph_seed);
    EXPECT_NE(a.runs[0].graph_seed, a.runs[4].graph_seed);
    EXPECT_NE(a.runs[0].data_seed, a.runs[2].data_seed);
    for (const auto& row : a.table) EXPECT_EQ(row.runs, 4);
}

TEST(SourceLocalization, AggregateIsRecomputableFromRuns) {
    std::vector<RunRecord> runs{{0, 1, 2, "ev", 0.5}, {1, 1, 3, "ev", 0.75}, {0, 1, 2, "spectral", 0.2},
                                {1, 1, 3, "spectral", 0.2}};
    auto archs = default_architectures(4, 5, 5, 2, false);
    const auto rows = aggregate(runs, {archs[4], archs[0]});
    EXPECT_EQ(rows[0].architecture, "ev");
    EXPECT_DOUBLE_EQ(rows[0].mean, 0.625);
    EXPECT_DOUBLE_EQ(rows[0].stddev, 0.125);
    EXPECT_DOUBLE_EQ(rows[1].stddev, 0.0);
    EXPECT_THROW(aggregate(runs, {archs[1]}), InvalidArgument);

    const std::string csv = results_csv(rows);
    EXPECT_EQ(csv, "architecture,mean_accuracy,std_accuracy,runs\nev,0.625,0.125,2\nspectral,0.2,0,2\n");
    const std::string table = results_text_table(rows, "Source localization");
    EXPECT_NE(table.find("Edge Variant (EV)"), std::string::npos);
    EXPECT_NE(table.find("62.50 (+- 12.50)%"), std::string::npos);
    EXPECT_EQ(runs_csv(runs).substr(0, 55), "run_id,graph_seed,data_seed,architecture,test_accuracy\n");
}

TEST(SourceLocalization, DisconnectedGraphsFail) {
    SourceLocConfig cfg = tiny_config();
    cfg.p_intra = 0.0;
    cfg.p_inter = 0.0;
    EXPECT_THROW(run_source_localization(cfg), ExperimentFailure);
}

TEST(SourceLocalization, ConfigValidation) {
    SourceLocConfig cfg = tiny_config();
    cfg.t_max = 11;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = tiny_config();
    cfg.num_train = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = tiny_config();
    cfg.architectures.clear();
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = tiny_config();
    cfg.num_nodes = 9;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsLowestFailure) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, 4, [&](Index i) { hits[static_cast<std::size_t>(i)]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    try {
        parallel_for(20, 3, [](Index i) {
            if (i == 7 || i == 12) throw std::runtime_error("fail " + std::to_string(i));
        });
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "fail 7");
    }
}
