"""Knuth's Bayesian optimal binning for planar and one-dimensional data.

The log-posterior of an ``m_x`` by ``m_y`` equal-bin grid over a span of
volume ``V``, with ``M = m_x * m_y`` bins holding ``n_k`` of ``N`` points, is

    N log(M/V) + lgamma(M/2) - M lgamma(1/2)
        + sum_k lgamma(n_k + 1/2) - lgamma(N + M/2)

up to an additive constant shared by all grids.  The MAP grid is found by
exhaustive search over ``[1, c_x] x [1, c_y]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .core import (
    BinGrid,
    Histogram1D,
    OptimalHistogram,
    PointPattern,
    Window,
    axis_bins,
    bin_counts,
    data_span,
)
from .errors import DegenerateSpan, EmptyPattern, OutOfSpan

LOG_GAMMA_HALF = 0.5 * math.log(math.pi)
TIE_TOL = 1e-12


@dataclass(frozen=True)
class KnuthSearchConfig:
    c_x: int = 50
    c_y: int = 50

    def __post_init__(self):
        if self.c_x < 1 or self.c_y < 1:
            raise ValueError(f"bin caps must be >= 1, got {self.c_x}, {self.c_y}")


@dataclass(frozen=True)
class LogPosteriorSurface:
    """Log-posterior of every candidate grid; ``values[m_x - 1, m_y - 1]``."""

    values: np.ndarray
    argmax: tuple[int, int]

    @property
    def max_value(self) -> float:
        return float(self.values[self.argmax[0] - 1, self.argmax[1] - 1])


def _grid_terms(n: int, m, volume: float):
    """Count-independent part of the log-posterior for bin totals ``m``."""
    m = np.asarray(m, dtype=float)
    return n * np.log(m / volume) + gammaln(m / 2) - m * LOG_GAMMA_HALF - gammaln(n + m / 2)


def log_posterior_from_counts(counts, volume: float) -> float:
    """Log-posterior of a binning given its per-bin counts and span volume."""
    counts = np.asarray(counts).ravel()
    n = int(counts.sum())
    m = counts.size
    return float(_grid_terms(n, m, volume) + gammaln(counts + 0.5).sum())


def log_posterior(pattern: PointPattern, grid: BinGrid) -> float:
    if pattern.n < 1:
        raise EmptyPattern("log-posterior needs at least one point")
    counts = bin_counts(grid, pattern.xy)
    return log_posterior_from_counts(counts, grid.span.area())


def _select_argmax(values: np.ndarray) -> tuple[int, ...]:
    """Argmax with near-ties resolved toward fewer bins, then smaller m_x."""
    best = values.max()
    tol = TIE_TOL * max(1.0, abs(best))
    cand = np.argwhere(values >= best - tol) + 1
    key = min(cand.tolist(), key=lambda ms: (math.prod(ms), ms[0]))
    return tuple(int(v) for v in key)


def posterior_surface(xy: np.ndarray, span: Window, config: KnuthSearchConfig) -> np.ndarray:
    """Log-posterior for every grid in ``[1, c_x] x [1, c_y]`` over ``span``."""
    xy = np.asarray(xy, dtype=float)
    if not np.all(span.contains(xy)):
        raise OutOfSpan(f"some points lie outside span {span}")
    n = len(xy)
    cx, cy = config.c_x, config.c_y
    volume = span.area()
    lg_table = gammaln(np.arange(n + 1) + 0.5)

    mys = np.arange(1, cy + 1)
    iy_all = np.stack([axis_bins(xy[:, 1], span.y_min, span.height, m) for m in mys])
    # offsets of each m_y block inside one concatenated count vector
    tri = np.concatenate([[0], np.cumsum(mys)])
    values = np.empty((cx, cy))
    for mx in range(1, cx + 1):
        ix = axis_bins(xy[:, 0], span.x_min, span.width, mx)
        starts = mx * tri[:-1]
        flat = ix[None, :] * mys[:, None] + iy_all + starts[:, None]
        counts = np.bincount(flat.ravel(), minlength=mx * tri[-1])
        sums = np.add.reduceat(lg_table[counts], starts)
        values[mx - 1] = sums + _grid_terms(n, mx * mys, volume)
    return values


def posterior_histogram(pattern: PointPattern, grid: BinGrid) -> OptimalHistogram:
    """Posterior mean and variance of bin heights for a given grid."""
    counts = bin_counts(grid, pattern.xy)
    n = pattern.n
    m = grid.M
    density = m / grid.span.area()
    mean = density * (counts + 0.5) / (n + m / 2)
    var = density**2 * ((counts + 0.5) * (n - counts + (m - 1) / 2)) / ((n + m / 2 + 1) * (n + m / 2) ** 2)
    return OptimalHistogram(
        grid=grid,
        counts=counts,
        heights_mean=mean,
        heights_var=var,
        log_posterior=log_posterior_from_counts(counts, grid.span.area()),
    )


def optimal_binning(
    pattern: PointPattern,
    config: KnuthSearchConfig = KnuthSearchConfig(),
    span_override: Optional[Window] = None,
) -> tuple[OptimalHistogram, LogPosteriorSurface]:
    """MAP grid of a planar pattern and its posterior-mean histogram.

    Parameters
    ----------
    pattern : PointPattern
        At least two points.
    config : KnuthSearchConfig
        Per-axis caps on the number of bins.
    span_override : Window, optional
        Region to bin instead of the tight bounding box of the data.

    Returns
    -------
    hist : OptimalHistogram
    surface : LogPosteriorSurface
    """
    if pattern.n < 2:
        raise EmptyPattern(f"optimal binning needs at least 2 points, got {pattern.n}")
    span = data_span(pattern) if span_override is None else span_override
    values = posterior_surface(pattern.xy, span, config)
    mx, my = _select_argmax(values)
    hist = posterior_histogram(pattern, BinGrid(mx, my, span))
    return hist, LogPosteriorSurface(values=values, argmax=(mx, my))


def histogram_1d(samples, m: int, span: Optional[tuple[float, float]] = None, posterior_mean: bool = True) -> Histogram1D:
    """Equal-width histogram with ``m`` bins over ``span`` (default: sample range).

    With ``posterior_mean`` the heights are Knuth posterior means, otherwise
    plain normalized counts.
    """
    x = np.asarray(samples, dtype=float)
    lo, hi = (float(x.min()), float(x.max())) if span is None else span
    if not hi > lo:
        raise DegenerateSpan(f"degenerate sample range [{lo}, {hi}]")
    if x.min() < lo or x.max() > hi:
        raise OutOfSpan(f"samples fall outside [{lo}, {hi}]")
    counts = np.bincount(axis_bins(x, lo, hi - lo, m), minlength=m)
    n = len(x)
    if posterior_mean:
        heights = (m / (hi - lo)) * (counts + 0.5) / (n + m / 2)
    else:
        heights = counts * m / ((hi - lo) * n)
    return Histogram1D(m=m, span=(lo, hi), counts=counts, heights=heights)


def log_posterior_curve_1d(samples, c: int) -> np.ndarray:
    """Log-posterior for ``M = 1..c`` equal bins over the sample range."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise EmptyPattern(f"need at least 2 samples, got {len(x)}")
    lo, hi = float(x.min()), float(x.max())
    if not hi > lo:
        raise DegenerateSpan("all samples are equal")
    n = len(x)
    lg_table = gammaln(np.arange(n + 1) + 0.5)
    curve = np.empty(c)
    for m in range(1, c + 1):
        counts = np.bincount(axis_bins(x, lo, hi - lo, m), minlength=m)
        curve[m - 1] = lg_table[counts].sum()
    return curve + _grid_terms(n, np.arange(1, c + 1), hi - lo)


def optimal_binning_1d(samples: Sequence[float], c: int = 100) -> tuple[Histogram1D, int, np.ndarray]:
    """1D Knuth rule: returns the posterior-mean histogram, ``M_hat`` and the
    log-posterior curve indexed by ``M - 1``."""
    curve = log_posterior_curve_1d(samples, c)
    (m_hat,) = _select_argmax(curve)
    return histogram_1d(samples, m_hat), m_hat, curve
