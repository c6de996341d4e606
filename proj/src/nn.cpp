#include "evgraph/nn.hpp"

#include "evgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evgraph {

namespace {

Vector flatten_node_major(const GraphSignal& z) {
    Vector flat(z.size());
    for (Index i = 0; i < z.rows(); ++i)
        for (Index f = 0; f < z.cols(); ++f) flat(i * z.cols() + f) = z(i, f);
    return flat;
}

GraphSignal unflatten_node_major(const Vector& flat, Index rows, Index cols) {
    GraphSignal z(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index f = 0; f < cols; ++f) z(i, f) = flat(i * cols + f);
    return z;
}

Index argmax_lowest(const Vector& v) {
    Index best = 0;
    for (Index c = 1; c < v.size(); ++c)
        if (v(c) > v(best)) best = c;
    return best;
}

void zero_blocks(Model& m) {
    for (auto block : m.parameter_blocks()) std::fill(block.begin(), block.end(), 0.0);
}

} // namespace

Nonlinearity parse_nonlinearity(std::string_view name) {
    if (name == "relu") return Nonlinearity::relu;
    if (name == "none") return Nonlinearity::none;
    throw InvalidArgument("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view to_string(Nonlinearity n) { return n == Nonlinearity::relu ? "relu" : "none"; }

std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

void LayerSpec::validate() const {
    if (in_features < 1 || out_features < 1)
        throw InvalidArgument("layer: feature counts must be at least 1");
    switch (family) {
    case FilterFamily::polynomial:
    case FilterFamily::node_variant:
    case FilterFamily::hybrid_ev:
        if (order < 0) throw InvalidArgument("layer: order must be non-negative");
        break;
    case FilterFamily::edge_variant:
    case FilterFamily::spectral_ev:
        if (order < 1) throw InvalidArgument("layer: order must be at least 1");
        break;
    case FilterFamily::spectral:
        if (num_knots < 2) throw InvalidArgument("layer: spectral family needs at least 2 knots");
        break;
    }
    if ((family == FilterFamily::node_variant || family == FilterFamily::hybrid_ev) &&
        privileged_size < 1)
        throw InvalidArgument("layer: privileged set size must be at least 1");
}

std::vector<std::span<double>> Model::parameter_blocks() {
    std::vector<std::span<double>> out;
    for (auto& layer : layers) {
        for (auto& f : layer.bank)
            for (auto b : coefficient_blocks(f)) out.push_back(b);
        if (layer.spec.bias)
            out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    }
    out.emplace_back(readout.data(), static_cast<std::size_t>(readout.size()));
    out.emplace_back(offset.data(), static_cast<std::size_t>(offset.size()));
    return out;
}

std::vector<std::span<const double>> Model::parameter_blocks() const {
    auto blocks = const_cast<Model*>(this)->parameter_blocks();
    return {blocks.begin(), blocks.end()};
}

Index Model::num_parameters() const {
    Index n = 0;
    for (auto b : parameter_blocks()) n += static_cast<Index>(b.size());
    return n;
}

Model Model::zeros_like() const {
    Model z = *this;
    zero_blocks(z);
    return z;
}

void Model::validate(Index num_nodes) const {
    if (layers.empty()) throw InvalidArgument("model: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& spec = layers[l].spec;
        spec.validate();
        if (l > 0 && spec.in_features != layers[l - 1].spec.out_features)
            throw InvalidArgument("model: layer " + std::to_string(l + 1) + " expects " +
                                  std::to_string(spec.in_features) + " features, previous emits " +
                                  std::to_string(layers[l - 1].spec.out_features));
        if (static_cast<Index>(layers[l].bank.size()) != spec.in_features * spec.out_features)
            throw InvalidArgument("model: filter bank size mismatch in layer " +
                                  std::to_string(l + 1));
        if (layers[l].bias.size() != (spec.bias ? spec.out_features : 0))
            throw InvalidArgument("model: bias size mismatch in layer " + std::to_string(l + 1));
    }
    const Index flat = num_nodes * layers.back().spec.out_features;
    if (readout.rows() != flat || readout.cols() != offset.size() || offset.size() < 1)
        throw InvalidArgument("model: readout is " + std::to_string(readout.rows()) + "x" +
                              std::to_string(readout.cols()) + ", expected " +
                              std::to_string(flat) + "x" + std::to_string(offset.size()));
}

FilterSpec resolve_filter_spec(const LayerSpec& spec, const FilterContext& ctx, std::uint64_t seed) {
    spec.validate();
    FilterSpec out;
    out.family = spec.family;
    out.order = spec.order;
    out.num_knots = spec.num_knots;
    out.use_self_loops = spec.use_self_loops;
    auto need_graph = [&]() -> const Graph& {
        if (!ctx.graph) throw InvalidArgument("layer: family needs a graph");
        return *ctx.graph;
    };
    auto need_spectrum = [&]() -> const Spectrum& {
        if (!ctx.spectrum)
            throw InvalidArgument("layer: " + std::string(to_string(spec.family)) +
                                  " family needs the graph spectrum");
        return *ctx.spectrum;
    };
    switch (spec.family) {
    case FilterFamily::node_variant:
    case FilterFamily::hybrid_ev:
        out.privileged = std::make_shared<const PrivilegedSet>(
            select_privileged(need_graph(), spec.strategy, spec.privileged_size, seed));
        break;
    case FilterFamily::spectral:
        out.kernel = std::make_shared<const Matrix>(
            cubic_spline_kernel(need_spectrum().eigenvalues, spec.num_knots));
        break;
    case FilterFamily::spectral_ev:
        out.ev_basis =
            std::make_shared<const SpectralEVBasis>(spectral_ev_basis(need_spectrum(), need_graph()));
        break;
    default:
        break;
    }
    return out;
}

Model build_model(const std::vector<LayerSpec>& specs, Index num_classes, const FilterContext& ctx,
                  std::uint64_t seed) {
    if (!ctx.graph) throw InvalidArgument("build_model: no graph");
    if (num_classes < 1) throw InvalidArgument("build_model: need at least one class");
    if (specs.empty()) throw InvalidArgument("build_model: no layers");
    Rng rng(derive_seed(seed, "init"));
    Model m;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const FilterSpec fs = resolve_filter_spec(specs[l], ctx, derive_seed(seed, "structure", {l}));
        Layer layer{specs[l], {}, {}};
        for (Index f = 0; f < specs[l].out_features; ++f)
            for (Index g = 0; g < specs[l].in_features; ++g)
                layer.bank.push_back(random_filter(fs, ctx, specs[l].in_features, rng));
        if (specs[l].bias) layer.bias = Vector::Zero(specs[l].out_features);
        m.layers.push_back(std::move(layer));
    }
    const Index flat = ctx.graph->num_nodes() * specs.back().out_features;
    const double bound = 1.0 / std::sqrt(static_cast<double>(flat));
    m.readout.resize(flat, num_classes);
    for (Index c = 0; c < num_classes; ++c)
        for (Index r = 0; r < flat; ++r) m.readout(r, c) = uniform(rng, -bound, bound);
    m.offset = Vector::Zero(num_classes);
    m.validate(ctx.graph->num_nodes());
    return m;
}

GraphSignal layer_forward(const Layer& layer, const FilterContext& ctx, const GraphSignal& input,
                          LayerCache* cache) {
    const auto& spec = layer.spec;
    if (input.cols() != spec.in_features)
        throw InvalidArgument("layer_forward: input has " + std::to_string(input.cols()) +
                              " features, layer expects " + std::to_string(spec.in_features));
    GraphSignal pre = GraphSignal::Zero(input.rows(), spec.out_features);
    if (cache) cache->tapes.assign(layer.bank.size(), FilterTape{});
    for (Index f = 0; f < spec.out_features; ++f)
        for (Index g = 0; g < spec.in_features; ++g) {
            FilterTape* tape = cache ? &cache->tapes[f * spec.in_features + g] : nullptr;
            pre.col(f) += filter_forward(layer.filter(f, g), ctx, input.col(g), tape);
        }
    if (spec.bias) {
        if (layer.bias.size() != spec.out_features)
            throw InvalidArgument("layer_forward: bias has the wrong length");
        pre.rowwise() += layer.bias.transpose();
    }
    GraphSignal out = spec.nonlinearity == Nonlinearity::relu ? GraphSignal(pre.cwiseMax(0.0)) : pre;
    if (cache) {
        cache->input = input;
        cache->pre_activation = std::move(pre);
    }
    return out;
}

Vector softmax(const Vector& logits) {
    const double top = logits.maxCoeff();
    Vector e(logits.size());
    for (Index c = 0; c < logits.size(); ++c) e(c) = std::exp(logits(c) - top);
    return e / e.sum();
}

Vector model_forward(const Model& m, const FilterContext& ctx, const GraphSignal& x,
                     ForwardCache* cache) {
    if (m.layers.empty()) throw InvalidArgument("model_forward: no layers");
    if (cache) cache->layers.resize(m.layers.size());
    GraphSignal z = x;
    for (std::size_t l = 0; l < m.layers.size(); ++l)
        z = layer_forward(m.layers[l], ctx, z, cache ? &cache->layers[l] : nullptr);
    Vector flat = flatten_node_major(z);
    if (flat.size() != m.readout.rows())
        throw InvalidArgument("model_forward: flattened features have length " +
                              std::to_string(flat.size()) + ", readout expects " +
                              std::to_string(m.readout.rows()));
    Vector probs = softmax(m.readout.transpose() * flat + m.offset);
    if (cache) {
        cache->flat = std::move(flat);
        cache->probs = probs;
    }
    return probs;
}

double cross_entropy(const Vector& probs, Index label) {
    if (label < 0 || label >= probs.size())
        throw InvalidArgument("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(probs.size()) + ")");
    return -std::log(probs(label) + 1e-12);
}

void model_backward(const Model& m, const FilterContext& ctx, const ForwardCache& cache, Index label,
                    double scale, Model& grad) {
    const Vector& p = cache.probs;
    if (label < 0 || label >= p.size())
        throw InvalidArgument("model_backward: label out of range");
    // d/dz_j of -log(p_label + eps) with p = softmax(z).
    Vector dlogits = p;
    dlogits(label) -= 1.0;
    dlogits *= scale * p(label) / (p(label) + 1e-12);

    grad.offset += dlogits;
    grad.readout.noalias() += cache.flat * dlogits.transpose();
    const Vector dflat = m.readout * dlogits;
    GraphSignal dz = unflatten_node_major(dflat, cache.layers.back().pre_activation.rows(),
                                          m.layers.back().spec.out_features);

    for (std::size_t l = m.layers.size(); l-- > 0;) {
        const Layer& layer = m.layers[l];
        const LayerCache& lc = cache.layers[l];
        if (layer.spec.nonlinearity == Nonlinearity::relu)
            dz = dz.cwiseProduct((lc.pre_activation.array() > 0.0).cast<double>().matrix());
        if (layer.spec.bias) grad.layers[l].bias += dz.colwise().sum().transpose();
        const bool need_input = l > 0;
        GraphSignal dinput = GraphSignal::Zero(lc.input.rows(), lc.input.cols());
        GraphSignal dcol;
        for (Index g = 0; g < layer.spec.in_features; ++g) {
            const GraphSignal xg = lc.input.col(g);
            if (need_input) dcol = GraphSignal::Zero(xg.rows(), 1);
            for (Index f = 0; f < layer.spec.out_features; ++f) {
                const Index idx = f * layer.spec.in_features + g;
                filter_backward(layer.bank[idx], ctx, xg, lc.tapes[idx], dz.col(f),
                                grad.layers[l].bank[idx], need_input ? &dcol : nullptr);
            }
            if (need_input) dinput.col(g) = dcol;
        }
        dz = std::move(dinput);
    }
}

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("adam: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw InvalidArgument("adam: decay factors must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("adam: epsilon must be positive");
    if (batch_size < 1) throw InvalidArgument("adam: batch size must be at least 1");
    if (epochs < 0) throw InvalidArgument("adam: negative epoch count");
}

AdamState adam_init(std::span<const std::span<double>> params) {
    AdamState s;
    for (auto b : params) {
        s.first.emplace_back(b.size(), 0.0);
        s.second.emplace_back(b.size(), 0.0);
    }
    return s;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamConfig& config) {
    if (params.size() != grads.size() || params.size() != state.first.size())
        throw InvalidArgument("adam_step: parameter, gradient and state blocks differ");
    for (std::size_t b = 0; b < grads.size(); ++b) {
        if (grads[b].size() != params[b].size() || state.first[b].size() != params[b].size())
            throw InvalidArgument("adam_step: block " + std::to_string(b) + " size mismatch");
        for (std::size_t i = 0; i < grads[b].size(); ++i)
            if (!std::isfinite(grads[b][i]))
                throw NumericFailure("adam_step: non-finite gradient in parameter block " +
                                     std::to_string(b) + " at index " + std::to_string(i));
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = state.first[b];
        auto& v = state.second[b];
        for (std::size_t i = 0; i < params[b].size(); ++i) {
            const double g = grads[b][i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            params[b][i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
        }
    }
}

std::vector<const Sample*> Dataset::split(Split s) const {
    std::vector<const Sample*> out;
    for (const auto& x : samples)
        if (x.split == s) out.push_back(&x);
    return out;
}

void Dataset::validate(Index num_nodes) const {
    if (num_classes < 1) throw InvalidArgument("dataset: need at least one class");
    Index features = -1;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        if (s.label < 0 || s.label >= num_classes)
            throw InvalidArgument("dataset: sample " + std::to_string(k) + " has label " +
                                  std::to_string(s.label) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
        if (s.signal.rows() != num_nodes)
            throw InvalidArgument("dataset: sample " + std::to_string(k) + " has " +
                                  std::to_string(s.signal.rows()) + " rows, graph has " +
                                  std::to_string(num_nodes) + " nodes");
        if (features < 0) features = s.signal.cols();
        if (s.signal.cols() != features || features < 1)
            throw InvalidArgument("dataset: samples disagree on feature count");
        if (!s.signal.allFinite())
            throw InvalidArgument("dataset: sample " + std::to_string(k) + " is not finite");
    }
}

TrainResult train(Model model, const Dataset& data, const FilterContext& ctx,
                  const AdamConfig& config) {
    config.validate();
    if (!ctx.graph) throw InvalidArgument("train: no graph");
    model.validate(ctx.graph->num_nodes());
    data.validate(ctx.graph->num_nodes());
    const auto train_set = data.split(Split::train);
    if (train_set.empty()) throw InvalidArgument("train: the train split is empty");
    if (data.num_classes != model.num_classes())
        throw InvalidArgument("train: dataset and model disagree on the class count");
    const bool has_val = !data.split(Split::val).empty();

    TrainResult result{std::move(model), {}};
    Model& m = result.model;
    Model grad = m.zeros_like();
    auto params = m.parameter_blocks();
    auto grad_blocks = grad.parameter_blocks();
    std::vector<std::span<const double>> grad_view(grad_blocks.begin(), grad_blocks.end());
    AdamState state = adam_init(params);

    std::vector<std::size_t> order(train_set.size());
    ForwardCache cache;
    for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(config.seed, "shuffle", {static_cast<std::uint64_t>(epoch)}));
        shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        Index correct = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double scale = 1.0 / static_cast<double>(stop - start);
            zero_blocks(grad);
            for (std::size_t k = start; k < stop; ++k) {
                const Sample& s = *train_set[order[k]];
                const Vector probs = model_forward(m, ctx, s.signal, &cache);
                loss_sum += cross_entropy(probs, s.label);
                if (argmax_lowest(probs) == s.label) ++correct;
                model_backward(m, ctx, cache, s.label, scale, grad);
            }
            adam_step(params, grad_view, state, config);
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        if (has_val) stats.val_accuracy = evaluate(m, data, Split::val, ctx);
        result.trace.push_back(stats);
    }
    return result;
}

Index predict(const Model& m, const FilterContext& ctx, const GraphSignal& x) {
    return argmax_lowest(model_forward(m, ctx, x));
}

double evaluate(const Model& m, const Dataset& data, Split split, const FilterContext& ctx) {
    const auto set = data.split(split);
    if (set.empty())
        throw InvalidArgument("evaluate: the " + std::string(to_string(split)) + " split is empty");
    Index correct = 0;
    for (const Sample* s : set)
        if (predict(m, ctx, s->signal) == s->label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(set.size());
}

} // namespace evgraph
