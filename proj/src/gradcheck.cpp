#include "evgraph/gradcheck.hpp"

#include "evgraph/errors.hpp"
#include "evgraph/graph.hpp"
#include "evgraph/random.hpp"
#include "evgraph/spectrum.hpp"

#include <algorithm>
#include <cmath>

namespace evgraph {

void GradcheckOptions::validate() const {
    if (num_nodes < 3) throw InvalidArgument("gradcheck: num_nodes must be at least 3");
    if (probes < 1) throw InvalidArgument("gradcheck: probes must be positive");
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("gradcheck: step must be positive");
    if (!(abs_floor >= 0.0)) throw InvalidArgument("gradcheck: abs_floor must be non-negative");
    if (batch < 1) throw InvalidArgument("gradcheck: batch must be positive");
}

double relative_error(double analytic, double numeric, double abs_floor) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= abs_floor) return 0.0;
    return diff / std::max({std::abs(analytic), std::abs(numeric), abs_floor});
}

double batch_loss(const Model& m, const FilterContext& ctx, const std::vector<Sample>& batch) {
    double loss = 0.0;
    for (const auto& s : batch) loss += cross_entropy(model_forward(m, ctx, s.signal), s.label);
    return loss;
}

Model batch_gradient(const Model& m, const FilterContext& ctx, const std::vector<Sample>& batch) {
    Model grad = m.zeros_like();
    ForwardCache cache;
    for (const auto& s : batch) {
        model_forward(m, ctx, s.signal, &cache);
        model_backward(m, ctx, cache, s.label, 1.0, grad);
    }
    return grad;
}

namespace {

Graph connected_sbm(Index n, std::uint64_t seed) {
    for (std::uint64_t a = 0; a < 100; ++a) {
        Graph g = build_sbm(n, 2, 0.6, 0.2, derive_seed(seed, "attempt", {a}));
        if (g.num_directed_edges() > 0 && is_connected(g)) return normalize_by_spectral_radius(g);
    }
    throw ExperimentFailure("gradcheck: no connected graph in 100 attempts");
}

} // namespace

std::vector<std::uint8_t> activation_pattern(const Model& m, const FilterContext& ctx,
                                             const std::vector<Sample>& batch) {
    std::vector<std::uint8_t> out;
    ForwardCache cache;
    for (const auto& s : batch) {
        model_forward(m, ctx, s.signal, &cache);
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            if (m.layers[l].spec.nonlinearity != Nonlinearity::relu) continue;
            const auto& pre = cache.layers[l].pre_activation;
            for (Index i = 0; i < pre.size(); ++i) out.push_back(pre.data()[i] > 0.0);
        }
    }
    return out;
}

std::vector<GradcheckResult> gradient_check(std::uint64_t seed, const GradcheckOptions& opts) {
    opts.validate();
    const Graph g = connected_sbm(opts.num_nodes, derive_seed(seed, "graph"));
    const Spectrum sp = eigendecompose(g);
    const FilterContext ctx{&g, &sp};
    const Index n = opts.num_nodes;

    std::vector<GradcheckResult> out;
    const FilterFamily families[] = {FilterFamily::polynomial,  FilterFamily::spectral,
                                     FilterFamily::node_variant, FilterFamily::edge_variant,
                                     FilterFamily::hybrid_ev,    FilterFamily::spectral_ev};
    for (std::uint64_t k = 0; k < std::size(families); ++k) {
        LayerSpec a, b;
        a.family = b.family = families[k];
        a.order = b.order = 2;
        a.num_knots = b.num_knots = 4;
        a.privileged_size = b.privileged_size = 3;
        a.out_features = 3;
        a.bias = true;
        b.in_features = 3;
        b.out_features = 2;
        b.nonlinearity = Nonlinearity::none;
        Model m = build_model({a, b}, 3, ctx, derive_seed(seed, "model", {k}));

        Rng rng(derive_seed(seed, "probe", {k}));
        std::vector<Sample> batch;
        for (Index s = 0; s < opts.batch; ++s) {
            Sample smp;
            smp.signal = Matrix(n, 1);
            for (Index i = 0; i < n; ++i) smp.signal(i, 0) = uniform(rng, -1.0, 1.0);
            smp.label = s % 3;
            batch.push_back(std::move(smp));
        }

        const Model grad = batch_gradient(m, ctx, batch);
        const auto gblocks = grad.parameter_blocks();
        auto params = m.parameter_blocks();
        std::vector<std::pair<std::size_t, std::size_t>> where;
        for (std::size_t bl = 0; bl < params.size(); ++bl)
            for (std::size_t i = 0; i < params[bl].size(); ++i) where.emplace_back(bl, i);
        shuffle(where.begin(), where.end(), rng);

        const auto pattern = activation_pattern(m, ctx, batch);
        GradcheckResult r;
        r.family = families[k];
        for (auto [bl, i] : where) {
            if (r.probes == opts.probes) break;
            double& v = params[bl][i];
            const double saved = v;
            v = saved + opts.step;
            const double up = batch_loss(m, ctx, batch);
            const bool kink_up = activation_pattern(m, ctx, batch) != pattern;
            v = saved - opts.step;
            const double down = batch_loss(m, ctx, batch);
            const bool kink_down = activation_pattern(m, ctx, batch) != pattern;
            v = saved;
            if (kink_up || kink_down) {
                ++r.skipped_kinks;
                continue;
            }
            ++r.probes;
            const double numeric = (up - down) / (2.0 * opts.step);
            r.max_abs_error = std::max(r.max_abs_error, std::abs(gblocks[bl][i] - numeric));
            r.max_relative_error =
                std::max(r.max_relative_error, relative_error(gblocks[bl][i], numeric, opts.abs_floor));
        }
        out.push_back(r);
    }
    return out;
}

} // namespace evgraph
