"""Seeded simulation studies shared by the acceptance tests and ``scripts/``.

Each study takes a ``base_seed``; realization ``i`` of a study uses stream
``base_seed + i`` unless noted otherwise, so any single run can be replayed
in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import PointPattern, RandomStream, Window
from .fitting import anisotropy_index, fit_thomas, linear_regression
from .generators import (
    ClusterShape,
    FixedN,
    ThomasParams,
    extend_window_below,
    gen_binomial,
    gen_hardcore,
    gen_inhomogeneous_poisson,
    gen_shaped_cluster,
    gen_thomas,
    linear_gradient,
)
from .knuth import optimal_binning, optimal_binning_1d
from .secondstats import crossing_scale, default_pcf_bandwidth, default_r_grid, k2_index, pair_correlation

W500 = Window(0.0, 500.0, 0.0, 500.0)
W1000x500 = Window(0.0, 1000.0, 0.0, 500.0)
MTP = ThomasParams(2e-4, 10.0, 10.0)

# piecewise-constant density on [0, 4) with these relative heights
FOUR_STEP_HEIGHTS = (1.0, 4.0, 2.0, 3.0)


def map_grid(pattern: PointPattern) -> tuple[int, int]:
    _, surface = optimal_binning(pattern)
    return surface.argmax


# --- 1D ----------------------------------------------------------------------

def four_step_sample(n: int, rng: RandomStream) -> np.ndarray:
    p = np.asarray(FOUR_STEP_HEIGHTS) / sum(FOUR_STEP_HEIGHTS)
    step = np.searchsorted(np.cumsum(p), rng.uniform(n), side="right")
    return np.minimum(step, 3) + rng.uniform(n)


def knuth_1d_study(n_seeds: int = 100, n: int = 1000, base_seed: int = 0) -> dict[str, list[int]]:
    """MAP bin counts for uniform, four-step and standard-normal samples."""
    out = {"uniform": [], "four-step": [], "gaussian": []}
    for i in range(n_seeds):
        rng = RandomStream(base_seed + i)
        out["uniform"].append(optimal_binning_1d(rng.uniform(n))[1])
        out["four-step"].append(optimal_binning_1d(four_step_sample(n, rng))[1])
        out["gaussian"].append(optimal_binning_1d(rng.normal(n))[1])
    return out


# --- homogeneity and gradients ---------------------------------------------------

def csr_stability(n_runs: int = 200, n: int = 1000, base_seed: int = 0, window: Window = W500) -> list[tuple[int, int]]:
    return [map_grid(gen_binomial(window, n, RandomStream(base_seed + i))) for i in range(n_runs)]


def gradient_study(
    n_seeds: int = 100, axis: str = "y", ratio: float = 4.0, n_mean: float = 1000.0, base_seed: int = 0,
    window: Window = W500,
) -> list[tuple[int, int]]:
    """MAP grids for a linear intensity gradient along ``axis`` whose ends
    differ by ``ratio`` and whose expected count is ``n_mean``."""
    mean_lam = n_mean / window.area()
    lam_low = 2 * mean_lam / (1 + ratio)
    lam_high = ratio * lam_low
    fn = linear_gradient(window, lam_low, lam_high, axis)
    return [
        map_grid(gen_inhomogeneous_poisson(window, fn, lam_high, RandomStream(base_seed + i)))
        for i in range(n_seeds)
    ]


# --- clustering ------------------------------------------------------------------

@dataclass
class ClumpScales:
    binning_diameter: float
    g_crossing: Optional[float]
    grid: tuple[int, int]


def clump_scales(pattern: PointPattern) -> ClumpScales:
    hist, surface = optimal_binning(pattern)
    g = pair_correlation(pattern, default_r_grid(pattern))
    return ClumpScales(hist.binning_diameter, crossing_scale(g), surface.argmax)


def mtp_pattern(seed: int, params: ThomasParams = MTP, window: Window = W500) -> PointPattern:
    return gen_thomas(window, params, rng=RandomStream(seed))


def mtp_clump_study(n_seeds: int = 50, base_seed: int = 0) -> list[ClumpScales]:
    return [clump_scales(mtp_pattern(base_seed + i)) for i in range(n_seeds)]


def hardcore_study(n_seeds: int = 50, n: int = 500, radius: float = 10.0, base_seed: int = 0) -> list[ClumpScales]:
    return [clump_scales(gen_hardcore(W500, n, radius, RandomStream(base_seed + i))) for i in range(n_seeds)]


@dataclass
class RegressionResult:
    kind: str
    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    r2: float


def cluster_regression(
    kind: str, sigmas: Sequence[float] = tuple(range(10, 101, 10)), n_seeds: int = 20, n: int = 1000,
    base_seed: int = 0, window: Window = W1000x500,
) -> RegressionResult:
    """Regress the Knuth bin area of single-cluster patterns on cluster size.

    square: a against side^2; disk: a/pi against radius^2; gaussian: a/pi
    against sigma^2 pi / 2.  Size ``s``, replicate ``i`` uses stream
    ``base_seed + 100 s + i``.
    """
    xs, ys = [], []
    for s in sigmas:
        for i in range(n_seeds):
            shape = ClusterShape(kind, s, window.center)
            p = gen_shaped_cluster(window, shape, n, RandomStream(base_seed + 100 * int(s) + i))
            hist, _ = optimal_binning(p)
            a = hist.grid.bin_area
            if kind == "square-uniform":
                xs.append(s * s)
                ys.append(a)
            elif kind == "disk-uniform":
                xs.append(s * s)
                ys.append(a / math.pi)
            else:
                xs.append(s * s * math.pi / 2)
                ys.append(a / math.pi)
    slope, intercept, r2 = linear_regression(xs, ys)
    return RegressionResult(kind, np.array(xs), np.array(ys), slope, intercept, r2)


@dataclass
class VirtualAggregation:
    frac_g_higher: float
    g_gap: float
    k2_gap: float
    grid_original: tuple[int, int]
    grid_extended: tuple[int, int]


def virtual_aggregation(pattern: PointPattern, r_min_compare: float = 5.0) -> VirtualAggregation:
    """Compare g, K2 and the Knuth grid of a pattern in its own window and in
    a window doubled by an empty strip below.  Both g estimates share the
    original pattern's kernel width and r grid."""
    extended = extend_window_below(pattern)
    r = default_r_grid(pattern)
    b = default_pcf_bandwidth(pattern)
    g = pair_correlation(pattern, r, b)
    ge = pair_correlation(extended, r, b)
    k2, k2e = k2_index(g), k2_index(ge)
    beyond = r > r_min_compare
    return VirtualAggregation(
        float(np.mean(ge.values[beyond] > g.values[beyond])),
        float(np.max(np.abs(ge.values - g.values))),
        float(np.max(np.abs(k2e.values - k2.values))),
        map_grid(pattern),
        map_grid(extended),
    )


def mtp_fit_study(n_seeds: int = 50, base_seed: int = 0) -> list[float]:
    """Fitted sigma for generated mTp patterns."""
    return [fit_thomas(mtp_pattern(base_seed + i)).sigma_hat for i in range(n_seeds)]


# --- anisotropy ------------------------------------------------------------------

@dataclass
class AnisotropyRun:
    a_x: float
    a_y: float
    index: float


def anisotropic_gaussian_study(
    rotation: float, n_seeds: int = 50, n: int = 1000, sigma_y: float = 30.0, ratio: float = 2.0,
    base_seed: int = 0, window: Window = W1000x500,
) -> list[AnisotropyRun]:
    """Single Gaussian cluster with sigma_x = ratio * sigma_y rotated about
    the window centre.  Replicate ``i`` uses the same stream at every angle."""
    out = []
    for i in range(n_seeds):
        shape = ClusterShape("gaussian", sigma_y, window.center, rotation, ratio)
        hist, _ = optimal_binning(gen_shaped_cluster(window, shape, n, RandomStream(base_seed + i)))
        out.append(AnisotropyRun(hist.grid.a_x, hist.grid.a_y, anisotropy_index(hist)))
    return out


def isotropic_mtp_anisotropy(
    sigmas: Sequence[float] = tuple(range(1, 101)), n: int = 3000, n_clusters: float = 5.0, base_seed: int = 0,
    window: Window = W500,
) -> list[float]:
    """Anisotropy index of fixed-N mTp patterns, one per sigma; sigma ``s``
    uses stream ``base_seed + s``."""
    rho = n_clusters / window.area()
    out = []
    for s in sigmas:
        params = ThomasParams(rho, float(s), n / n_clusters)
        p = gen_thomas(window, params, FixedN(n), RandomStream(base_seed + int(s)))
        hist, _ = optimal_binning(p)
        out.append(anisotropy_index(hist))
    return out
