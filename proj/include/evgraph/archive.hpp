#pragma once

#include "evgraph/filters.hpp"
#include "evgraph/nn.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace evgraph {

// JSON archives for filters and models. Coefficient arrays are flat, row-major and
// written as shortest round-trip decimals, so save -> load is bit exact. Everything a
// filter needs besides the graph itself (sparsity patterns, spline kernels, spectral-EV
// bases, privileged sets) is stored inline; loading never needs the graph.
//
// Filter object:
//   {"family": <name>, ...}
//   polynomial:   "taps": [K+1]
//   spectral:     "kernel": matrix N x b, "weights": [b]
//   node-variant: "privileged": set, "taps": matrix (K+1) x |B|
//   edge-variant: "use_self_loops": bool, "pattern": pattern, "coeffs": [K][nnz]
//   hybrid-ev:    "privileged": set, "diag0": [|B|], "pattern": pattern,
//                 "edges": [K][nnz], "global_taps": [K+1]
//   spectral-ev:  "basis": matrix N x r, "zero_index_set": [[i, j], ...], "mu": matrix r x K
// matrix  = {"rows": r, "cols": c, "data": [r*c]}
// pattern = {"rows": r, "cols": c, "row_ptr": [r+1], "col_idx": [nnz]}
// set     = {"nodes": [...], "assignment": [N]}
//
// Model object ("bias" only for layers whose spec enables it):
//   {"format": "evgraph-model", "version": 1, "num_nodes": N, "num_classes": C,
//    "layers": [{"spec": {...}, "filters": [F_out * F_in filter objects], "bias": [F_out]}],
//    "readout": matrix (N F_L) x C, "offset": [C]}

inline constexpr int archive_version = 1;

std::string filter_to_json(const FilterParams& p);
FilterParams filter_from_json(std::string_view text);

std::string model_to_json(const Model& m);
Model model_from_json(std::string_view text);

void save_filter(const FilterParams& p, const std::filesystem::path& path);
FilterParams load_filter(const std::filesystem::path& path);

void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

} // namespace evgraph
