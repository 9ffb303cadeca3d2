"""Grouped permutation importance with random forests for functional predictors
represented by wavelet coefficients."""
__version__ = "0.1.0"

from .forest import Dataset, Forest, ForestConfig, fit_forest, predict  # noqa: E402
from .importance import grouped_importance, importance_table  # noqa: E402
from .wavelets import dwt, idwt, get_filter  # noqa: E402

__all__ = ["Dataset", "Forest", "ForestConfig", "fit_forest", "predict",
           "grouped_importance", "importance_table", "dwt", "idwt", "get_filter",
           "__version__"]
