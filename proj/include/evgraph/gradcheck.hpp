#pragma once

#include "evgraph/nn.hpp"

#include <cstdint>
#include <vector>

namespace evgraph {

struct GradcheckOptions {
    Index num_nodes = 10;
    Index probes = 20;       ///< parameters checked per family
    double step = 1e-5;      ///< central-difference step
    double abs_floor = 1e-8; ///< differences below this count as exact
    Index batch = 4;

    void validate() const;
};

struct GradcheckResult {
    FilterFamily family = FilterFamily::polynomial;
    Index probes = 0;
    Index skipped_kinks = 0; ///< probes whose stencil flipped a ReLU, replaced by others
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
};

/// |a - n| / max(|a|, |n|, floor), or 0 when |a - n| <= floor.
double relative_error(double analytic, double numeric, double abs_floor);

/// Cross-entropy summed over a batch.
double batch_loss(const Model& m, const FilterContext& ctx, const std::vector<Sample>& batch);
/// ReLU on/off state of every hidden unit over the batch.
std::vector<std::uint8_t> activation_pattern(const Model& m, const FilterContext& ctx,
                                             const std::vector<Sample>& batch);
/// Backpropagated gradient of batch_loss, shaped like m.
Model batch_gradient(const Model& m, const FilterContext& ctx, const std::vector<Sample>& batch);

/// Compares backpropagation against central differences on a two-layer model (ReLU
/// layer with bias, then a linear layer, readout) for every filter family, on a random
/// normalized graph. A probe whose +-step perturbation changes any ReLU activation is not
/// differentiable there; it is skipped and the next parameter is tried. Deterministic in
/// seed.
std::vector<GradcheckResult> gradient_check(std::uint64_t seed, const GradcheckOptions& opts = {});

} // namespace evgraph
