"""Bayesian optimal binning and second-order statistics for spatial point patterns."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BinGrid,
    Histogram1D,
    OptimalHistogram,
    Point,
    PointPattern,
    RandomStream,
    Window,
    bin_index,
    data_span,
)
from .knuth import KnuthSearchConfig, log_posterior, optimal_binning, optimal_binning_1d  # noqa: E402
from .secondstats import (  # noqa: E402
    CurveEstimate,
    EnvelopeBand,
    crossing_scale,
    csr_envelope,
    k2_index,
    l_function,
    pair_correlation,
    ripley_k,
)

__all__ = [
    "BinGrid",
    "CurveEstimate",
    "EnvelopeBand",
    "Histogram1D",
    "KnuthSearchConfig",
    "OptimalHistogram",
    "Point",
    "PointPattern",
    "RandomStream",
    "Window",
    "bin_index",
    "crossing_scale",
    "csr_envelope",
    "data_span",
    "k2_index",
    "l_function",
    "log_posterior",
    "optimal_binning",
    "optimal_binning_1d",
    "pair_correlation",
    "ripley_k",
]
