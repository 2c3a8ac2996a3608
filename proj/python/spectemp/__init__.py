"""SNR-adaptive spectral tempering for embedding compression.

Thin wrapper over the compiled extension: fit a model on corpus embeddings,
read off the derived exponent gamma(k), and project documents and queries
with the same plan.
"""

from spectemp._spectemp import (
    ConfigError,
    DataError,
    FormatError,
    IoError,
    Model,
    NumericalError,
    ShapeError,
    exact_search,
    fit,
    generate_synthetic,
    grid_search_gamma,
    load_embeddings,
    load_model,
    metric,
    prefix_truncate,
    random_project,
    random_truncate,
    save_embeddings,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FormatError",
    "IoError",
    "Model",
    "NumericalError",
    "ShapeError",
    "exact_search",
    "fit",
    "generate_synthetic",
    "grid_search_gamma",
    "load_embeddings",
    "load_model",
    "metric",
    "prefix_truncate",
    "random_project",
    "random_truncate",
    "save_embeddings",
]

__version__ = "0.1.0"
