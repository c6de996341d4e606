#pragma once

#include "evgraph/filters.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace evgraph {

enum class Nonlinearity { relu, none };

Nonlinearity parse_nonlinearity(std::string_view name);
std::string_view to_string(Nonlinearity n);

/// Architecture of one graph-filter layer. Structural data the family needs
/// (privileged nodes, spline kernel, spectral-EV basis) is derived from the graph
/// when the model is built.
struct LayerSpec {
    Index in_features = 1;
    Index out_features = 1;
    FilterFamily family = FilterFamily::polynomial;
    Index order = 4;
    Index num_knots = 5;
    Index privileged_size = 5;
    SelectionStrategy strategy = SelectionStrategy::max_degree;
    bool use_self_loops = true;
    Nonlinearity nonlinearity = Nonlinearity::relu;
    /// Adds a learnable per-output-feature constant before the nonlinearity.
    bool bias = false;

    void validate() const;
};

/// Layer l: z_f = sigma(sum_g H_{f,g}(S) z_g [+ bias_f 1]). bank[f * in_features + g]
/// holds H_{f,g}; `bias` has out_features entries when spec.bias is set, else none.
struct Layer {
    LayerSpec spec;
    std::vector<FilterParams> bank;
    Vector bias;

    const FilterParams& filter(Index f, Index g) const { return bank[f * spec.in_features + g]; }
    FilterParams& filter(Index f, Index g) { return bank[f * spec.in_features + g]; }
};

/// Graph-filter layers followed by a dense readout with softmax. The readout sees the
/// final N x F features flattened node-major (index i * F + f).
struct Model {
    std::vector<Layer> layers;
    Matrix readout; ///< (N * F_L) x C
    Vector offset;  ///< C

    Index num_classes() const { return offset.size(); }

    /// Every learnable scalar: per layer the filter bank in (f, g) order and the bias, then
    /// readout, offset.
    std::vector<std::span<double>> parameter_blocks();
    std::vector<std::span<const double>> parameter_blocks() const;
    Index num_parameters() const;

    /// Same shape, all learnable scalars zero.
    Model zeros_like() const;

    /// Feature counts chain and the readout matches N * F_L.
    void validate(Index num_nodes) const;
};

/// Derives the structural pieces of a layer's filters from the graph. `seed` feeds the
/// spectral-proxy selection.
FilterSpec resolve_filter_spec(const LayerSpec& spec, const FilterContext& ctx, std::uint64_t seed);

/// Random initial model; see random_filter for the filter coefficients. The readout is
/// uniform on +-1/sqrt(N F_L) and the offset starts at zero.
Model build_model(const std::vector<LayerSpec>& specs, Index num_classes, const FilterContext& ctx,
                  std::uint64_t seed);

// ---------------------------------------------------------------------------

struct LayerCache {
    GraphSignal input;
    GraphSignal pre_activation;
    std::vector<FilterTape> tapes;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Vector flat;
    Vector probs;
};

GraphSignal layer_forward(const Layer& layer, const FilterContext& ctx, const GraphSignal& input,
                          LayerCache* cache = nullptr);

/// Max-shifted softmax.
Vector softmax(const Vector& logits);

/// Class probabilities for one graph signal.
Vector model_forward(const Model& m, const FilterContext& ctx, const GraphSignal& x,
                     ForwardCache* cache = nullptr);

/// -log(probs[label] + 1e-12).
double cross_entropy(const Vector& probs, Index label);

/// Accumulates scale * d(cross_entropy)/d(params) into `grad` (shaped like m).
void model_backward(const Model& m, const FilterContext& ctx, const ForwardCache& cache, Index label,
                    double scale, Model& grad);

// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    Index epochs = 20;
    Index batch_size = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    std::vector<std::vector<double>> first;
    std::vector<std::vector<double>> second;
    std::int64_t step = 0;
};

AdamState adam_init(std::span<const std::span<double>> params);

/// One bias-corrected ADAM update. Throws NumericFailure naming the block of a
/// non-finite gradient before touching any parameter.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamConfig& config);

// ---------------------------------------------------------------------------

enum class Split { train, val, test };

std::string_view to_string(Split s);

struct Sample {
    GraphSignal signal;
    Index label = 0; ///< 0-based class index
    Split split = Split::train;
};

struct Dataset {
    std::vector<Sample> samples;
    Index num_classes = 0;

    std::vector<const Sample*> split(Split s) const;
    /// Labels in range, shapes shared, values finite.
    void validate(Index num_nodes) const;
};

struct EpochStats {
    Index epoch = 0;
    double mean_train_loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> val_accuracy;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> trace;
};

/// Mini-batch ADAM on the mean batch cross-entropy. One seeded permutation per epoch;
/// the last short batch is kept. train_accuracy and mean_train_loss are gathered
/// during the epoch's forward passes.
TrainResult train(Model model, const Dataset& data, const FilterContext& ctx,
                  const AdamConfig& config);

/// argmax of the probabilities (lowest class on ties).
Index predict(const Model& m, const FilterContext& ctx, const GraphSignal& x);

/// Fraction of correctly classified samples of a split.
double evaluate(const Model& m, const Dataset& data, Split split, const FilterContext& ctx);

} // namespace evgraph
