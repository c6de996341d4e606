"""Graph-filter neural networks with edge-varying filters."""

from ._evgraph import (
    ConfigError,
    ExperimentFailure,
    Filter,
    Graph,
    InvalidArgument,
    NumericFailure,
    UnsupportedGraph,
    build_sbm,
    build_wan,
    default_function_words,
    diffuse,
    eigendecompose,
    frequency_signal,
    gradient_check,
    is_connected,
    label_of_node,
    normalize_by_spectral_radius,
    run_authorship,
    run_source_localization,
    signature_graph,
    tokenize,
)

__all__ = [
    "ConfigError",
    "ExperimentFailure",
    "Filter",
    "Graph",
    "InvalidArgument",
    "NumericFailure",
    "UnsupportedGraph",
    "build_sbm",
    "build_wan",
    "default_function_words",
    "diffuse",
    "eigendecompose",
    "frequency_signal",
    "gradient_check",
    "is_connected",
    "label_of_node",
    "normalize_by_spectral_radius",
    "run_authorship",
    "run_source_localization",
    "signature_graph",
    "tokenize",
]
