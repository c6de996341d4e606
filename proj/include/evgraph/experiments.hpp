#pragma once

#include "evgraph/nn.hpp"

#include <functional>
#include <string>
#include <vector>

namespace evgraph {

/// Community of 1-based node i under the contiguous-block convention: ceil(i C / N).
Index label_of_node(Index i, Index num_nodes, Index num_communities);

struct SourceSample {
    GraphSignal signal;
    Index label = 0;  ///< 0-based community
    Index source = 0; ///< 0-based node
    Index time = 0;
};

/// representative: every community diffuses from one fixed node, its highest-degree
/// member (lowest index on ties). uniform: the source is drawn uniformly inside the
/// community for every sample.
enum class SourceMode { representative, uniform };

SourceMode parse_source_mode(std::string_view name);
std::string_view to_string(SourceMode m);

/// Draws diffused deltas x = S^t delta_i on a normalized undirected graph: community c
/// uniform, source node i of c per the mode, t uniform in [t_min, t_max].
class SourceGenerator {
public:
    /// Throws InvalidArgument unless g is undirected with largest eigenvalue 1.
    SourceGenerator(const Graph& g, Index num_communities, Index t_min, Index t_max,
                    SourceMode mode = SourceMode::representative);

    SourceSample operator()(Rng& rng) const;
    /// S^t delta_i.
    GraphSignal diffuse(Index source, Index t) const;
    const std::vector<Index>& representatives() const { return representatives_; }

private:
    const Graph* graph_;
    Index communities_;
    Index t_min_, t_max_;
    SourceMode mode_;
    std::vector<Index> representatives_;
};

SourceSample gen_source_sample(const Graph& g, Index num_communities, Index t_min, Index t_max,
                               Rng& rng, SourceMode mode = SourceMode::representative);

struct Architecture {
    std::string name;  ///< short machine name, e.g. "hev-degree"
    std::string title; ///< row label of the text table
    LayerSpec layer;
};

/// The seven single-layer architectures: spectral, polynomial, NV (degree, proxies),
/// EV, HEV (degree, proxies), in that order.
std::vector<Architecture> default_architectures(Index order, Index num_knots, Index privileged_size,
                                                Index features, bool bias);

struct SourceLocConfig {
    Index num_nodes = 50;
    Index num_communities = 5;
    double p_intra = 0.8;
    double p_inter = 0.2;
    Index num_train = 2000;
    Index num_test = 200;
    Index t_min = 0;
    Index t_max = 50;
    SourceMode source_mode = SourceMode::representative;
    std::vector<Architecture> architectures = default_architectures(4, 5, 5, 32, true);
    AdamConfig adam{};
    Index num_graph_realizations = 10;
    Index num_data_realizations = 1;
    std::uint64_t master_seed = 1;
    Index workers = 1;

    void validate() const;
};

struct RunRecord {
    Index run_id = 0;
    std::uint64_t graph_seed = 0;
    std::uint64_t data_seed = 0;
    std::string architecture;
    double test_accuracy = 0.0;
};

struct ResultsRow {
    std::string architecture;
    std::string title;
    double mean = 0.0;
    double stddev = 0.0; ///< population standard deviation over runs
    Index runs = 0;
};

struct SourceLocResult {
    std::vector<RunRecord> runs; ///< ordered by run, then architecture
    std::vector<ResultsRow> table;
};

/// Every graph realization x data realization trains every architecture from its own
/// seeded initialization and evaluates it on the run's shared test set. Runs execute on
/// `workers` threads and merge in run order, so the result does not depend on it.
/// `progress` (optional) is called once per finished run, serialized.
SourceLocResult run_source_localization(const SourceLocConfig& cfg,
                                        const std::function<void(Index, Index)>& progress = {});

/// Mean and population standard deviation per architecture, in the order given.
std::vector<ResultsRow> aggregate(const std::vector<RunRecord>& runs,
                                  const std::vector<Architecture>& architectures);

std::string runs_csv(const std::vector<RunRecord>& runs);
std::string results_csv(const std::vector<ResultsRow>& rows);
/// Aligned two-column text table, accuracies in percent.
std::string results_text_table(const std::vector<ResultsRow>& rows, const std::string& caption);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first exception
/// thrown (lowest index) is rethrown after all threads join.
void parallel_for(Index count, Index workers, const std::function<void(Index)>& fn);

} // namespace evgraph
